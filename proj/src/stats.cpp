#include "choirlab/stats.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

namespace choirlab {

namespace {

struct Moments {
    long n = 0;
    double mean = 0.0;
    double variance = 0.0;  // sample variance, n-1 denominator
};

// Welford accumulation; numerically stable for long frame sequences.
Moments moments(std::span<const double> values) {
    Moments m;
    double m2 = 0.0;
    for (double x : values) {
        ++m.n;
        const double d = x - m.mean;
        m.mean += d / static_cast<double>(m.n);
        m2 += d * (x - m.mean);
    }
    m.variance = m.n >= 2 ? m2 / static_cast<double>(m.n - 1) : 0.0;
    return m;
}

// Continued fraction for the regularized incomplete beta (Lentz).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("regularized_incomplete_beta: a and b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_tailed_p(double t, double dof) {
    if (!(dof > 0.0)) throw std::invalid_argument("student_t_two_tailed_p: dof must be positive");
    if (t == 0.0) return 1.0;
    if (std::isinf(t)) return 0.0;
    const double x = dof / (dof + t * t);
    return regularized_incomplete_beta(0.5 * dof, 0.5, x);
}

SampleSummary summarize(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("summarize: empty sample");
    const Moments m = moments(values);
    return {m.n, m.mean, std::sqrt(m.variance)};
}

TestResult welch_t_test(std::span<const double> a, std::span<const double> b, TTestKind kind) {
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("welch_t_test: both samples need at least 2 observations");

    const Moments ma = moments(a);
    const Moments mb = moments(b);
    const double na = static_cast<double>(ma.n), nb = static_cast<double>(mb.n);
    const double diff = ma.mean - mb.mean;

    TestResult result;
    const double pooled_var =
        ((na - 1.0) * ma.variance + (nb - 1.0) * mb.variance) / (na + nb - 2.0);

    if (ma.variance == 0.0 && mb.variance == 0.0) {
        if (diff == 0.0) return {0.0, na + nb - 2.0, 1.0, 0.0, false};
        const double s = diff > 0.0 ? 1.0 : -1.0;
        return {s * std::numeric_limits<double>::infinity(), na + nb - 2.0, 0.0,
                s * std::numeric_limits<double>::infinity(), true};
    }

    if (kind == TTestKind::Welch) {
        const double ra = ma.variance / na, rb = mb.variance / nb;
        result.t_statistic = diff / std::sqrt(ra + rb);
        result.dof = (ra + rb) * (ra + rb) / (ra * ra / (na - 1.0) + rb * rb / (nb - 1.0));
    } else {
        result.t_statistic = diff / std::sqrt(pooled_var * (1.0 / na + 1.0 / nb));
        result.dof = na + nb - 2.0;
    }
    result.p_two_tailed = student_t_two_tailed_p(result.t_statistic, result.dof);
    result.cohens_d = diff / std::sqrt(pooled_var);
    return result;
}

DispersionReport report_tables(const std::vector<GroupedValues>& groups, TTestKind kind) {
    if (groups.empty()) throw std::invalid_argument("report_tables: no groups");

    DispersionReport report;
    std::map<std::pair<std::string, std::string>, std::pair<const GroupedValues*, const GroupedValues*>>
        q_vs_cm;  // (piece, section) -> (Q group, CM group)

    for (const GroupedValues& g : groups) {
        if (g.values.empty())
            throw std::invalid_argument("report_tables: empty group " + g.piece + "/" + g.section +
                                        "/" + g.config);
        GroupSummary summary;
        summary.piece = g.piece;
        summary.section = g.section;
        summary.config = g.config;
        summary.summary = summarize(g.values);
        summary.testable = summary.summary.n >= 2;
        summary.source = g.source;
        report.summaries.push_back(std::move(summary));

        auto& slot = q_vs_cm[{g.piece, g.section}];
        if (g.config == "Q") slot.first = &g;
        if (g.config == "CM") slot.second = &g;
    }

    for (const auto& [key, pair] : q_vs_cm) {
        const auto* q = pair.first;
        const auto* cm = pair.second;
        if (!q || !cm) continue;
        if (q->values.size() < 2 || cm->values.size() < 2) continue;  // flagged via testable
        GroupComparison cmp;
        cmp.piece = key.first;
        cmp.section = key.second;
        cmp.quartet = summarize(q->values);
        cmp.choir = summarize(cm->values);
        cmp.test = welch_t_test(q->values, cm->values, kind);
        report.comparisons.push_back(std::move(cmp));
    }
    return report;
}

void write_report_json(const DispersionReport& report, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["summaries"] = nlohmann::json::array();
    for (const GroupSummary& s : report.summaries) {
        doc["summaries"].push_back({{"piece", s.piece},
                                    {"section", s.section},
                                    {"config", s.config},
                                    {"n", s.summary.n},
                                    {"mean_cents", s.summary.mean},
                                    {"sd_cents", s.summary.sd},
                                    {"testable", s.testable},
                                    {"source", s.source}});
    }
    doc["comparisons"] = nlohmann::json::array();
    for (const GroupComparison& c : report.comparisons) {
        doc["comparisons"].push_back({{"piece", c.piece},
                                      {"section", c.section},
                                      {"quartet", {{"n", c.quartet.n}, {"mean_cents", c.quartet.mean}, {"sd_cents", c.quartet.sd}}},
                                      {"choir_mix", {{"n", c.choir.n}, {"mean_cents", c.choir.mean}, {"sd_cents", c.choir.sd}}},
                                      {"t", c.test.t_statistic},
                                      {"dof", c.test.dof},
                                      {"p_two_tailed", c.test.p_two_tailed},
                                      {"cohens_d", c.test.cohens_d},
                                      {"degenerate", c.test.degenerate}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_report_csv(const DispersionReport& report, const std::filesystem::path& summary_path,
                      const std::filesystem::path& tests_path) {
    {
        std::ofstream out(summary_path);
        if (!out) throw std::runtime_error("cannot open " + summary_path.string() + " for writing");
        out << "piece,section,config,n,mean_cents,sd_cents,testable\n";
        for (const GroupSummary& s : report.summaries)
            out << s.piece << ',' << s.section << ',' << s.config << ',' << s.summary.n << ','
                << format_double(s.summary.mean) << ',' << format_double(s.summary.sd) << ','
                << (s.testable ? 1 : 0) << '\n';
        if (!out) throw std::runtime_error("failed writing " + summary_path.string());
    }
    {
        std::ofstream out(tests_path);
        if (!out) throw std::runtime_error("cannot open " + tests_path.string() + " for writing");
        out << "piece,section,q_n,q_mean,q_sd,cm_n,cm_mean,cm_sd,t,dof,p_two_tailed,cohens_d,degenerate\n";
        for (const GroupComparison& c : report.comparisons)
            out << c.piece << ',' << c.section << ',' << c.quartet.n << ','
                << format_double(c.quartet.mean) << ',' << format_double(c.quartet.sd) << ','
                << c.choir.n << ',' << format_double(c.choir.mean) << ',' << format_double(c.choir.sd)
                << ',' << format_double(c.test.t_statistic) << ',' << format_double(c.test.dof) << ','
                << format_double(c.test.p_two_tailed) << ',' << format_double(c.test.cohens_d) << ','
                << (c.test.degenerate ? 1 : 0) << '\n';
        if (!out) throw std::runtime_error("failed writing " + tests_path.string());
    }
}

}  // namespace choirlab
