#include "ffsteer/error.hpp"
#include "ffsteer/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace ffsteer::harness {

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    auto num = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw InvalidInput("bad number '" + s + "' in grid '" + text + "'");
        }
    };
    if (text.find(':') != std::string::npos) {
        std::stringstream ss(text);
        std::string a, b, c;
        std::getline(ss, a, ':');
        std::getline(ss, b, ':');
        std::getline(ss, c, ':');
        const double lo = num(a), hi = num(b), step = num(c);
        if (!(step > 0.0) || hi < lo) throw InvalidInput("grid '" + text + "' needs lo <= hi and step > 0");
        const long n = std::lround(std::floor((hi - lo) / step + 1e-9));
        for (long i = 0; i <= n; ++i) {
            // Round to 1e-12 so 0.1-style steps print cleanly.
            out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
        }
    } else {
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) out.push_back(num(tok));
        }
    }
    if (out.empty()) throw InvalidInput("empty grid '" + text + "'");
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (!(out[i] > out[i - 1])) throw InvalidInput("grid must be strictly ascending");
    }
    return out;
}

SweepResult gg_sweep(const Track& track, const VehicleParams& vehicle, const std::vector<NamedController>& controllers,
                     const std::vector<double>& grid, const ClosedLoopConfig& cfg, int jobs) {
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw InvalidInput("gg_sweep: grid must be strictly ascending");
    }
    std::vector<std::vector<RunReport>> per(controllers.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t c = next++; c < controllers.size(); c = next++) {
            std::unique_ptr<Feedforward> ff = controllers[c].prototype->clone();
            for (double gg : grid) {
                ClosedLoopConfig run = cfg;
                run.gg_scale = gg;
                RunReport rep = eval_closed_loop(track, vehicle, *ff, run);
                rep.controller = controllers[c].name;
                const bool failed = rep.failed;
                per[c].push_back(std::move(rep));
                if (failed) break;
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(controllers.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SweepResult out;
    double best = 0.0;
    for (std::size_t c = 0; c < controllers.size(); ++c) {
        SweepControllerSummary s;
        s.controller = controllers[c].name;
        s.runs = per[c].size();
        for (const auto& r : per[c]) {
            if (!r.failed) s.max_gg = std::max(s.max_gg, r.gg_scale);
        }
        best = std::max(best, s.max_gg);
        out.summary.push_back(s);
        for (auto& r : per[c]) out.reports.push_back(std::move(r));
    }
    for (auto& s : out.summary) s.relative_gg = best > 0.0 ? s.max_gg / best : 0.0;
    return out;
}

}  // namespace ffsteer::harness
