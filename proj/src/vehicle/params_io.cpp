#include "ffsteer/vehicle.hpp"

#include "ffsteer/error.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace ffsteer {

namespace {

using nlohmann::json;

json tire_to_json(const TireCoefficients& t) { return {{"B", t.B}, {"C", t.C}, {"D", t.D}, {"E", t.E}}; }

// Typos in a parameter file would otherwise fall back to defaults silently.
void reject_unknown(const json& j, const json& known, const std::string& where) {
    if (!j.is_object()) throw InvalidInput(where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key) && !(where == "vehicle" && key == "wheelbase")) {
            throw InvalidInput("unknown " + where + " key '" + key + "'");
        }
    }
}

TireCoefficients tire_from_json(const json& j, const TireCoefficients& fallback) {
    reject_unknown(j, tire_to_json(fallback), "tire");
    TireCoefficients t = fallback;
    t.B = j.value("B", t.B);
    t.C = j.value("C", t.C);
    t.D = j.value("D", t.D);
    t.E = j.value("E", t.E);
    return t;
}

json to_json(const VehicleParams& p) {
    return {{"mass", p.mass},
            {"yaw_inertia", p.yaw_inertia},
            {"l_f", p.l_f},
            {"l_r", p.l_r},
            {"track_width_f", p.track_width_f},
            {"track_width_r", p.track_width_r},
            {"h_cg", p.h_cg},
            {"tire_front", tire_to_json(p.tire_f)},
            {"tire_rear", tire_to_json(p.tire_r)},
            {"tau_steer", p.tau_steer},
            {"steer_rate_limit", p.steer_rate_limit},
            {"steer_angle_limit", p.steer_angle_limit},
            {"drag_coeff", p.drag_coeff},
            {"downforce_coeff", p.downforce_coeff},
            {"aero_balance_front", p.aero_balance_front},
            {"max_drive_force", p.max_drive_force},
            {"max_brake_force", p.max_brake_force},
            {"brake_balance_front", p.brake_balance_front},
            {"gravity", p.gravity}};
}

VehicleParams from_json(const json& j) {
    VehicleParams p;
    reject_unknown(j, to_json(p), "vehicle");
    p.mass = j.value("mass", p.mass);
    p.yaw_inertia = j.value("yaw_inertia", p.yaw_inertia);
    p.l_f = j.value("l_f", p.l_f);
    p.l_r = j.value("l_r", p.l_r);
    p.track_width_f = j.value("track_width_f", p.track_width_f);
    p.track_width_r = j.value("track_width_r", p.track_width_r);
    p.h_cg = j.value("h_cg", p.h_cg);
    if (j.contains("tire_front")) p.tire_f = tire_from_json(j.at("tire_front"), p.tire_f);
    if (j.contains("tire_rear")) p.tire_r = tire_from_json(j.at("tire_rear"), p.tire_r);
    p.tau_steer = j.value("tau_steer", p.tau_steer);
    p.steer_rate_limit = j.value("steer_rate_limit", p.steer_rate_limit);
    p.steer_angle_limit = j.value("steer_angle_limit", p.steer_angle_limit);
    p.drag_coeff = j.value("drag_coeff", p.drag_coeff);
    p.downforce_coeff = j.value("downforce_coeff", p.downforce_coeff);
    p.aero_balance_front = j.value("aero_balance_front", p.aero_balance_front);
    p.max_drive_force = j.value("max_drive_force", p.max_drive_force);
    p.max_brake_force = j.value("max_brake_force", p.max_brake_force);
    p.brake_balance_front = j.value("brake_balance_front", p.brake_balance_front);
    p.gravity = j.value("gravity", p.gravity);
    if (j.contains("wheelbase")) {
        const double l = j.at("wheelbase").get<double>();
        if (l != p.wheelbase()) throw InvalidInput("wheelbase must equal l_f + l_r");
    }
    p.validate();
    return p;
}

}  // namespace

std::string VehicleParams::to_json_string() const { return to_json(*this).dump(2); }

VehicleParams VehicleParams::from_json_string(const std::string& text) {
    try {
        return from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("vehicle params: ") + e.what());
    }
}

VehicleParams VehicleParams::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_string(ss.str());
}

void VehicleParams::to_json_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << to_json_string() << '\n';
}

}  // namespace ffsteer
