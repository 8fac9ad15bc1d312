#pragma once

#include "ffsteer/controllers.hpp"
#include "ffsteer/harness.hpp"
#include "ffsteer/learning/train.hpp"
#include "ffsteer/metrics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ffsteer::plots {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    bool markers = false;  // scatter instead of a polyline
};

/// A line/scatter chart, or a heat map when `cells` is non-empty.
struct Figure {
    std::string name;  // file stem
    std::string title;
    std::string xlabel;
    std::string ylabel;
    std::vector<Series> series;

    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<double>> cells;  // [row][col]

    /// Hash of the plotted numbers and labels; regression tests compare this
    /// rather than SVG bytes.
    std::uint64_t data_hash() const;
    std::string render_svg() const;
    std::string to_json() const;
    static Figure from_json(const std::string& text);
};

/// Writes <dir>/<name>.svg and <dir>/<name>.plot.json per figure and returns
/// the SVG paths.
std::vector<std::string> write_figures(const std::vector<Figure>& figures, const std::string& dir);

/// Re-renders every *.plot.json found in dir into out_dir.
std::vector<std::string> render_plot_data(const std::string& dir, const std::string& out_dir);

// Figure builders for the report set.

/// Deviation cross-sections of the surface at fixed speeds, the constant
/// understeer line k_ug * a_y for contrast, and optional fitting data.
Figure handling_diagram(const EhdSurface& surface, const std::vector<double>& speeds, double ay_max,
                        double k_ug, const std::vector<EhdSample>& data = {});
/// Steering-direction-normalised mean error per a_x bin, one series per model.
Figure ax_error_profile(const std::vector<harness::OpenLoopResult>& results);
/// Horizon-step by channel heat map of permutation importance.
Figure importance_heatmap(const std::string& model, const learning::Importance& imp, double dt);
Figure xcorr_figure(const XcorrResult& xc, const std::string& title);
/// Error metrics versus gg, one curve per controller in name order.
std::vector<Figure> sweep_figures(const harness::SweepResult& sweep);
Figure finetune_figure(const std::vector<harness::FinetuneTrace>& traces);
/// Lateral error and steering traces of one run.
std::vector<Figure> time_series(const harness::TelemetryLog& log, const std::string& stem);

}  // namespace ffsteer::plots
