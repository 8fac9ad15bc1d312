#include "ffsteer/csv.hpp"
#include "ffsteer/error.hpp"
#include "ffsteer/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace ffsteer::harness {

const std::vector<std::string> kTelemetryColumns = {
    "t",       "s",        "x",         "y",         "yaw",       "vx",       "vy",
    "yaw_rate", "delta",   "delta_ff",  "delta_fb",  "ax_meas",   "ay_meas",  "ay_target",
    "ax_target", "v_target", "lat_err", "head_err",  "lap_id",    "gg_scale"};

std::string TelemetryLog::horizon_path(const std::string& csv_path) {
    std::filesystem::path p(csv_path);
    p.replace_extension();
    return p.string() + ".horizon.csv";
}

void TelemetryLog::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    csv::write_header(out, kTelemetryColumns);
    for (const auto& r : rows) {
        csv::write_row(out, {r.t, r.s, r.x, r.y, r.yaw, r.vx, r.vy, r.yaw_rate, r.delta, r.delta_ff, r.delta_fb,
                             r.ax_meas, r.ay_meas, r.ay_target, r.ax_target, r.v_target, r.lat_err, r.head_err,
                             static_cast<double>(r.lap_id), r.gg_scale});
    }
    if (rows.empty() || rows.front().horizon.empty()) return;
    const std::size_t n = rows.front().horizon.size();
    std::ofstream hz(horizon_path(path));
    if (!hz) throw InvalidInput("cannot write '" + horizon_path(path) + "'");
    std::vector<std::string> header{"t", "lap_id"};
    for (std::size_t k = 0; k < n; ++k) {
        header.push_back("v" + std::to_string(k));
        header.push_back("ax" + std::to_string(k));
        header.push_back("ay" + std::to_string(k));
    }
    csv::write_header(hz, header);
    std::vector<double> row;
    for (const auto& r : rows) {
        row.assign({r.t, static_cast<double>(r.lap_id)});
        for (const auto& h : r.horizon) {
            row.push_back(h.v_x);
            row.push_back(h.a_x);
            row.push_back(h.a_y);
        }
        csv::write_row(hz, row);
    }
}

TelemetryLog TelemetryLog::read(const std::string& path) {
    const csv::Table table = csv::read(path);
    std::vector<std::size_t> idx;
    for (const auto& name : kTelemetryColumns) idx.push_back(table.require(name));
    TelemetryLog log;
    log.rows.reserve(table.rows.size());
    for (const auto& v : table.rows) {
        TelemetryRow r;
        double* fields[] = {&r.t,        &r.s,        &r.x,        &r.y,       &r.yaw,      &r.vx,      &r.vy,
                            &r.yaw_rate, &r.delta,    &r.delta_ff, &r.delta_fb, &r.ax_meas, &r.ay_meas,
                            &r.ay_target, &r.ax_target, &r.v_target, &r.lat_err, &r.head_err};
        for (std::size_t k = 0; k < std::size(fields); ++k) *fields[k] = v[idx[k]];
        r.lap_id = static_cast<int>(std::lround(v[idx[18]]));
        r.gg_scale = v[idx[19]];
        log.rows.push_back(std::move(r));
    }
    const std::string hp = horizon_path(path);
    if (std::filesystem::exists(hp)) {
        const csv::Table hz = csv::read(hp);
        if (hz.rows.size() != log.rows.size()) {
            throw InvalidInput(hp + ": " + std::to_string(hz.rows.size()) + " rows, telemetry has " +
                               std::to_string(log.rows.size()));
        }
        if (hz.header.size() < 5 || (hz.header.size() - 2) % 3 != 0) throw InvalidInput(hp + ": bad header");
        const std::size_t n = (hz.header.size() - 2) / 3;
        for (std::size_t i = 0; i < hz.rows.size(); ++i) {
            auto& h = log.rows[i].horizon;
            h.resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                h[k] = {hz.rows[i][2 + 3 * k], hz.rows[i][3 + 3 * k], hz.rows[i][4 + 3 * k]};
            }
        }
    }
    return log;
}

std::vector<int> TelemetryLog::lap_ids() const {
    std::vector<int> ids;
    for (const auto& r : rows) {
        if (std::find(ids.begin(), ids.end(), r.lap_id) == ids.end()) ids.push_back(r.lap_id);
    }
    return ids;
}

TelemetryLog TelemetryLog::filter(const std::function<bool(const TelemetryRow&)>& keep) const {
    TelemetryLog out;
    for (const auto& r : rows) {
        if (keep(r)) out.rows.push_back(r);
    }
    return out;
}

TelemetryLog TelemetryLog::laps(const std::vector<int>& ids) const {
    return filter([&](const TelemetryRow& r) { return std::find(ids.begin(), ids.end(), r.lap_id) != ids.end(); });
}

TelemetryLog TelemetryLog::without_laps(const std::vector<int>& ids) const {
    return filter([&](const TelemetryRow& r) { return std::find(ids.begin(), ids.end(), r.lap_id) == ids.end(); });
}

std::vector<learning::Record> to_records(const TelemetryLog& log, double wheelbase) {
    std::vector<learning::Record> out;
    out.reserve(log.rows.size());
    for (const auto& r : log.rows) {
        if (r.horizon.empty()) throw InvalidInput("telemetry has no horizon samples; the sidecar file is missing");
        out.push_back(learning::make_record(r.horizon, r.rho(), r.delta, wheelbase, r.lap_id, r.t));
    }
    return out;
}

std::vector<EhdSample> to_ehd_samples(const TelemetryLog& log, double wheelbase, EhdAySource source) {
    std::vector<EhdSample> out;
    out.reserve(log.rows.size());
    for (const auto& r : log.rows) {
        const double ay = source == EhdAySource::Target ? r.ay_target : r.ay_meas;
        out.push_back({ay, r.vx, r.delta - ay * wheelbase / (r.vx * r.vx)});
    }
    return out;
}

}  // namespace ffsteer::harness
