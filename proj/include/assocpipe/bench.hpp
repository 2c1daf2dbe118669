#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "errors.hpp"
#include "pipeline.hpp"

// Fixed-input scaling benchmark: stages 1-6 re-run from clean state for each
// worker count (fresh work tree, fresh store), timing each stage. Speedup is
// measured against the single-worker run of the same stage, matching the
// relative-to-one-core methodology; per-point stores are left in place so
// callers can verify the benchmark changed nothing.

namespace assocpipe {

struct SpeedupPoint {
    int stage = 0;
    unsigned workers = 0;
    double seconds = 0.0;
    double speedup = 0.0;
    double efficiency = 0.0;
};

struct SpeedupReport {
    std::vector<SpeedupPoint> points;
    bool ok = true;
    std::string error;

    const SpeedupPoint* find(int stage, unsigned workers) const {
        for (const auto& p : points)
            if (p.stage == stage && p.workers == workers) return &p;
        return nullptr;
    }
};

inline std::filesystem::path bench_point_dir(const std::filesystem::path& report_dir,
                                             unsigned workers) {
    return report_dir / ("w" + std::to_string(workers));
}

inline void write_speedup_csv(const SpeedupReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << "stage,workers,seconds,speedup,efficiency\n";
    for (const auto& p : report.points)
        out << p.stage << ',' << p.workers << ',' << p.seconds << ',' << p.speedup << ','
            << p.efficiency << '\n';
}

// gnuplot data blocks (one per stage, separated by blank lines) plus a
// companion script for the cores-vs-speedup log-log plot.
inline void write_speedup_plot(const SpeedupReport& report, const std::filesystem::path& dat,
                               const std::filesystem::path& plt) {
    std::map<int, std::vector<const SpeedupPoint*>> by_stage;
    for (const auto& p : report.points) by_stage[p.stage].push_back(&p);
    std::ofstream out(dat, std::ios::trunc);
    if (!out) throw io_error("cannot open " + dat.string() + " for writing");
    out << "# cores vs speedup, one block per pipeline stage\n";
    bool first = true;
    for (const auto& [stage, points] : by_stage) {
        if (!first) out << "\n\n";
        first = false;
        out << "# stage " << stage << "\n";
        for (const auto* p : points) out << p->workers << ' ' << p->speedup << '\n';
    }
    out.close();

    std::ofstream script(plt, std::ios::trunc);
    script << "set logscale xy\n"
           << "set xlabel 'workers'\n"
           << "set ylabel 'speedup'\n"
           << "set key left top\n"
           << "plot";
    int index = 0;
    for (const auto& [stage, points] : by_stage) {
        script << (index ? ", " : " ") << "'" << dat.filename().string() << "' index " << index
               << " with linespoints title 'stage " << stage << "'";
        ++index;
    }
    script << "\n";
}

// Runs the full pipeline once per worker count against fresh copies of the
// work tree and store. worker_list must start at 1, the speedup baseline.
inline SpeedupReport bench(const PipelineConfig& base, const std::vector<unsigned>& worker_list,
                           const std::filesystem::path& report_dir) {
    if (worker_list.empty() || worker_list.front() != 1)
        throw argument_error("bench: worker list must start at 1");
    std::filesystem::create_directories(report_dir);

    SpeedupReport report;
    std::map<int, double> baseline;
    for (unsigned workers : worker_list) {
        PipelineConfig cfg = base;
        cfg.workers = workers;
        cfg.stages = {1, 2, 3, 4, 5, 6};
        auto point_dir = bench_point_dir(report_dir, workers);
        cfg.work_dir = point_dir / "work";
        cfg.store_dir = point_dir / "store";
        std::filesystem::remove_all(point_dir);  // fresh copies every point

        PipelineReport run_report = run(cfg);
        write_timing_csv(run_report.records,
                         point_dir / ("timing-w" + std::to_string(workers) + ".csv"));
        for (const auto& rec : run_report.records) {
            SpeedupPoint p;
            p.stage = rec.stage;
            p.workers = workers;
            p.seconds = rec.seconds;
            if (workers == 1) baseline[rec.stage] = rec.seconds;
            p.speedup = baseline.count(rec.stage) && rec.seconds > 0.0
                            ? baseline[rec.stage] / rec.seconds
                            : 0.0;
            p.efficiency = p.speedup / double(workers);
            report.points.push_back(p);
        }
        if (!run_report.ok) {
            report.ok = false;
            report.error = run_report.error;
            break;  // partial report
        }
    }
    write_speedup_csv(report, report_dir / "bench.csv");
    write_speedup_plot(report, report_dir / "bench.dat", report_dir / "bench.plt");
    return report;
}

}  // namespace assocpipe
