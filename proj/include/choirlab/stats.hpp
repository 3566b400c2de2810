#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace choirlab {

/// n, arithmetic mean and sample standard deviation (n-1 denominator;
/// sd is 0 for a single observation).
struct SampleSummary {
    long n = 0;
    double mean = 0.0;
    double sd = 0.0;
};

SampleSummary summarize(std::span<const double> values);

enum class TTestKind { Welch, Pooled };

struct TestResult {
    double t_statistic = 0.0;
    double dof = 0.0;           // Welch-Satterthwaite (or na+nb-2 for pooled)
    double p_two_tailed = 1.0;
    double cohens_d = 0.0;      // pooled-SD effect size
    bool degenerate = false;    // both variances zero with unequal means
};

/// Two-sample t-test, unequal variances by default. Requires at least two
/// observations per sample. Equal samples give t = 0, p = 1, d = 0; two
/// zero-variance samples with different means are flagged degenerate.
TestResult welch_t_test(std::span<const double> a, std::span<const double> b,
                        TTestKind kind = TTestKind::Welch);

/// Two-tailed Student-t survival probability P(|T| >= |t|) with dof
/// degrees of freedom, via the regularized incomplete beta function.
double student_t_two_tailed_p(double t, double dof);

/// I_x(a, b), continued-fraction evaluation, ~1e-14 accurate.
double regularized_incomplete_beta(double a, double b, double x);

// ---------------------------------------------------------------------------
// Grouped reporting: per (piece, section, config) summaries plus Q-vs-CM
// tests per (piece, section).

struct GroupedValues {
    std::string piece;
    std::string section;
    std::string config;  // "Q" (quartet) or "CM" (choir mix), free-form otherwise
    std::vector<double> values;  // dispersion samples in cents
    std::string source;          // provenance, e.g. the input file
};

struct GroupSummary {
    std::string piece, section, config;
    SampleSummary summary;
    bool testable = false;  // n >= 2
    std::string source;
};

struct GroupComparison {
    std::string piece, section;
    SampleSummary quartet, choir;
    TestResult test;
};

struct DispersionReport {
    std::vector<GroupSummary> summaries;
    std::vector<GroupComparison> comparisons;
};

/// Summaries for every group; Welch tests for every (piece, section) that
/// has both a "Q" and a "CM" group with n >= 2. Throws on empty input.
DispersionReport report_tables(const std::vector<GroupedValues>& groups,
                               TTestKind kind = TTestKind::Welch);

void write_report_json(const DispersionReport& report, const std::filesystem::path& path);
/// Two CSVs: <stem>_summary.csv (piece,section,config,n,mean,sd) and
/// <stem>_tests.csv (piece,section,t,dof,p,cohens_d).
void write_report_csv(const DispersionReport& report, const std::filesystem::path& summary_path,
                      const std::filesystem::path& tests_path);

}  // namespace choirlab
