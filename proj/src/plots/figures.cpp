#include "ffsteer/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace ffsteer::plots {

namespace {

std::string label(const char* fmt, double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

}  // namespace

Figure handling_diagram(const EhdSurface& surface, const std::vector<double>& speeds, double ay_max, double k_ug,
                        const std::vector<EhdSample>& data) {
    Figure f;
    f.name = "handling_diagram";
    f.title = "Steering deviation over lateral acceleration";
    f.xlabel = "a_y [m/s^2]";
    f.ylabel = "delta_dev [rad]";
    const int n = 61;
    if (!data.empty()) {
        Series s{"data", {}, {}, true};
        for (const auto& d : data) {
            s.x.push_back(d.a_y);
            s.y.push_back(d.delta_dev);
        }
        f.series.push_back(std::move(s));
    }
    for (double v : speeds) {
        Series s{label("surface v = %g m/s", v), {}, {}, false};
        for (int i = 0; i < n; ++i) {
            const double ay = ay_max * i / (n - 1);
            s.x.push_back(ay);
            s.y.push_back(surface.deviation(ay, v));
        }
        f.series.push_back(std::move(s));
    }
    Series ug{"k_ug a_y", {0.0, ay_max}, {0.0, k_ug * ay_max}, false};
    f.series.push_back(std::move(ug));
    return f;
}

Figure ax_error_profile(const std::vector<harness::OpenLoopResult>& results) {
    Figure f;
    f.name = "open_loop_ax_profile";
    f.title = "Open-loop error by longitudinal acceleration";
    f.xlabel = "a_x bin centre [m/s^2]";
    f.ylabel = "mean normalised error [rad]";
    for (const auto& r : results) {
        Series s{r.controller, {}, {}, false};
        for (const auto& b : r.ax_bins) {
            s.x.push_back(0.5 * (b.lo + b.hi));
            s.y.push_back(b.n ? b.mean_error : std::numeric_limits<double>::quiet_NaN());
        }
        f.series.push_back(std::move(s));
    }
    return f;
}

Figure importance_heatmap(const std::string& model, const learning::Importance& imp, double dt) {
    Figure f;
    f.name = "importance_" + model;
    f.title = "Permutation importance (" + model + ")";
    f.xlabel = "horizon offset [s]";
    f.row_labels = {"v_x", "a_x", "a_y"};
    for (int k = 0; k < imp.horizon; ++k) f.col_labels.push_back(label("%.2f", k * dt));
    for (const auto& row : imp.by_step) f.cells.push_back(row);
    return f;
}

Figure xcorr_figure(const XcorrResult& xc, const std::string& title) {
    Figure f;
    f.name = "xcorr";
    f.title = title;
    f.xlabel = "lag [s]";
    f.ylabel = "normalised correlation";
    f.series.push_back({"correlation", xc.lags, xc.correlation, false});
    f.series.push_back({label("peak at %.3f s", xc.lag_at_peak), {xc.lag_at_peak}, {xc.peak}, true});
    return f;
}

std::vector<Figure> sweep_figures(const harness::SweepResult& sweep) {
    struct Metric {
        const char* name;
        const char* title;
        const char* ylabel;
        double (*get)(const harness::RunReport&);
    };
    const Metric metrics[] = {
        {"sweep_lateral_rmse", "Lateral error RMSE", "[m]", [](const harness::RunReport& r) { return r.lateral_error.rmse; }},
        {"sweep_lateral_mae", "Lateral error MAE", "[m]", [](const harness::RunReport& r) { return r.lateral_error.mae; }},
        {"sweep_velocity_rmse", "Velocity error RMSE", "[m/s]", [](const harness::RunReport& r) { return r.velocity_error.rmse; }},
        {"sweep_ay_rmse", "Lateral acceleration error RMSE", "[m/s^2]", [](const harness::RunReport& r) { return r.ay_error.rmse; }},
        {"sweep_jerk", "Lateral jerk RMS", "[m/s^3]", [](const harness::RunReport& r) { return r.lateral_jerk_rms; }},
        {"sweep_lap_time", "Mean lap time", "[s]", [](const harness::RunReport& r) { return r.mean_lap_time(); }},
    };
    // Completed runs only, grouped by controller name.
    std::map<std::string, std::vector<const harness::RunReport*>> by_name;
    for (const auto& r : sweep.reports) {
        if (!r.failed) by_name[r.controller].push_back(&r);
    }
    std::vector<Figure> out;
    for (const auto& m : metrics) {
        Figure f;
        f.name = m.name;
        f.title = m.title;
        f.xlabel = "gg scale";
        f.ylabel = m.ylabel;
        for (const auto& [name, runs] : by_name) {
            Series s{name, {}, {}, false};
            for (const auto* r : runs) {
                s.x.push_back(r->gg_scale);
                s.y.push_back(m.get(*r));
            }
            f.series.push_back(std::move(s));
        }
        out.push_back(std::move(f));
    }
    return out;
}

Figure finetune_figure(const std::vector<harness::FinetuneTrace>& traces) {
    Figure f;
    f.name = "finetune_lap_time";
    f.title = "Lap time over fine-tuning iterations";
    f.xlabel = "iteration";
    f.ylabel = "lap time [s]";
    for (const auto& t : traces) {
        Series s{t.controller, {}, {}, false};
        for (std::size_t i = 0; i < t.lap_times.size(); ++i) {
            s.x.push_back(static_cast<double>(i));
            const bool bad = i < t.failed.size() && t.failed[i];
            s.y.push_back(bad ? std::numeric_limits<double>::quiet_NaN() : t.lap_times[i]);
        }
        f.series.push_back(std::move(s));
    }
    return f;
}

std::vector<Figure> time_series(const harness::TelemetryLog& log, const std::string& stem) {
    Figure err;
    err.name = stem + "_lateral_error";
    err.title = "Lateral error";
    err.xlabel = "t [s]";
    err.ylabel = "[m]";
    Figure steer;
    steer.name = stem + "_steering";
    steer.title = "Steering";
    steer.xlabel = "t [s]";
    steer.ylabel = "[rad]";
    Series e{"lateral error", {}, {}, false};
    Series d{"delta", {}, {}, false}, ff{"delta_ff", {}, {}, false}, fb{"delta_fb", {}, {}, false};
    for (const auto& r : log.rows) {
        e.x.push_back(r.t);
        e.y.push_back(r.lat_err);
        d.x.push_back(r.t);
        d.y.push_back(r.delta);
        ff.x.push_back(r.t);
        ff.y.push_back(r.delta_ff);
        fb.x.push_back(r.t);
        fb.y.push_back(r.delta_fb);
    }
    err.series.push_back(std::move(e));
    steer.series = {std::move(d), std::move(ff), std::move(fb)};
    return {err, steer};
}

}  // namespace ffsteer::plots
