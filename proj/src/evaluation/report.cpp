#include "evaluation/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ffae::evaluation {
namespace {

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::ranges::sort(v);
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::string metrics_csv(std::span<const EvalRun> runs) {
    std::ostringstream out;
    out << "protocol,direction,R@1,R@5,R@10,mean\n";
    for (const auto& r : runs) {
        out << protocol_name(r.protocol) << ',' << direction_name(r.direction) << ',' << fixed(r.recalls[0]) << ','
            << fixed(r.recalls[1]) << ',' << fixed(r.recalls[2]) << ',' << fixed(r.mean) << '\n';
    }
    return out.str();
}

std::string summary_text(std::span<const EvalRun> runs, std::span<const NamedLossLog> logs) {
    std::ostringstream out;
    out << "retrieval\n";
    if (runs.empty()) out << "  (no runs)\n";
    for (const auto& r : runs) {
        out << "  " << protocol_name(r.protocol);
        if (r.protocol == Protocol::random_m) out << " M=" << r.m << " seed=" << r.seed;
        out << ' ' << direction_name(r.direction) << "  R@1 " << fixed(r.recalls[0]) << "  R@5 "
            << fixed(r.recalls[1]) << "  R@10 " << fixed(r.recalls[2]) << "  mean " << fixed(r.mean) << "  ("
            << r.queries << " queries";
        if (r.clamped_queries) out << ", " << r.clamped_queries << " with a clamped pool";
        out << ")\n";
    }
    for (const auto& log : logs) {
        out << "losses " << log.name << " (" << log.records.size() << " rows)\n";
        for (auto task : objectives::kAllTasks) {
            std::vector<double> values;
            for (const auto& rec : log.records)
                if (rec.task == task) values.push_back(rec.loss);
            if (values.empty()) continue;
            const auto tenth = std::max<std::size_t>(1, values.size() / 10);
            const double first = median({values.begin(), values.begin() + static_cast<std::ptrdiff_t>(tenth)});
            const double last = median({values.end() - static_cast<std::ptrdiff_t>(tenth), values.end()});
            out << "  " << objectives::task_name(task) << "  steps " << values.size() << "  first-10% median "
                << fixed(first, 4) << "  last-10% median " << fixed(last, 4) << '\n';
        }
    }
    return out.str();
}

void write_report(const std::filesystem::path& dir, std::span<const EvalRun> runs,
                  std::span<const NamedLossLog> logs) {
    std::filesystem::create_directories(dir);
    write_file(dir / "metrics.csv", metrics_csv(runs));
    write_file(dir / "summary.txt", summary_text(runs, logs));
}

}  // namespace ffae::evaluation
