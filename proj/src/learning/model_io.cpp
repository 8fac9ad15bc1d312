#include "ffsteer/error.hpp"
#include "ffsteer/learning/train.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace ffsteer::learning {

namespace {

constexpr int kFormatVersion = 1;
using nlohmann::json;

json normalizer_json(const Normalizer& n) {
    return {{"mean", {n.mean[0], n.mean[1], n.mean[2]}},
            {"std", {n.stddev[0], n.stddev[1], n.stddev[2]}},
            {"channels", {"v_x", "a_x", "a_y"}},
            {"rho_scale", n.rho_scale},
            {"a_y_scale", n.a_y_scale},
            {"target_scale", n.target_scale}};
}

Normalizer normalizer_from(const json& j) {
    Normalizer n;
    for (int c = 0; c < 3; ++c) {
        n.mean[c] = j.at("mean").at(c).get<double>();
        n.stddev[c] = j.at("std").at(c).get<double>();
    }
    n.rho_scale = j.at("rho_scale").get<double>();
    n.a_y_scale = j.at("a_y_scale").get<double>();
    n.target_scale = j.at("target_scale").get<double>();
    return n;
}

}  // namespace

std::string model_to_json(const Model& model) {
    json j;
    j["version"] = kFormatVersion;
    j["kind"] = model.kind();
    if (const auto* m = dynamic_cast<const LstmModel*>(&model)) {
        const auto& c = m->config();
        j["architecture"] = {{"horizon", c.horizon}, {"input_dim", c.input_dim}, {"hidden", c.hidden},
                             {"dropout", c.dropout}};
    } else if (const auto* m = dynamic_cast<const MsnnModel*>(&model)) {
        const auto& c = m->config();
        j["architecture"] = {{"horizon", c.horizon},       {"regions_ay", c.regions_ay}, {"regions_ax", c.regions_ax},
                             {"regions_vx", c.regions_vx}, {"hidden", c.hidden},         {"ramp_width", c.ramp_width},
                             {"transient", c.transient}};
        j["boundaries"] = {m->boundaries[0], m->boundaries[1], m->boundaries[2]};
    } else {
        throw InvalidInput("model_to_json: unknown model kind '" + model.kind() + "'");
    }
    j["normalization"] = normalizer_json(model.norm);
    json tensors = json::object();
    for (const auto& b : model.params.blocks()) {
        // Stored column-major in memory, written row-major.
        std::vector<double> data;
        data.reserve(b.size());
        for (int r = 0; r < b.rows; ++r) {
            for (int c = 0; c < b.cols; ++c) {
                data.push_back(model.params.values[b.offset + static_cast<std::size_t>(c) * b.rows + r]);
            }
        }
        tensors[b.name] = {{"shape", {b.rows, b.cols}}, {"data", data}};
    }
    j["parameters"] = tensors;
    return j.dump();
}

std::unique_ptr<Model> model_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        const int version = j.at("version").get<int>();
        if (version > kFormatVersion) {
            throw InvalidInput("model file version " + std::to_string(version) + " is newer than supported");
        }
        const std::string kind = j.at("kind").get<std::string>();
        const json& a = j.at("architecture");
        std::unique_ptr<Model> model;
        if (kind == "lstm") {
            LstmConfig c;
            c.horizon = a.at("horizon").get<int>();
            c.input_dim = a.at("input_dim").get<int>();
            c.hidden = a.at("hidden").get<int>();
            c.dropout = a.at("dropout").get<double>();
            model = std::make_unique<LstmModel>(c);
        } else if (kind == "msnn") {
            MsnnConfig c;
            c.horizon = a.at("horizon").get<int>();
            c.regions_ay = a.at("regions_ay").get<int>();
            c.regions_ax = a.at("regions_ax").get<int>();
            c.regions_vx = a.at("regions_vx").get<int>();
            c.hidden = a.at("hidden").get<int>();
            c.ramp_width = a.at("ramp_width").get<double>();
            c.transient = a.at("transient").get<bool>();
            auto m = std::make_unique<MsnnModel>(c);
            for (int d = 0; d < 3; ++d) m->boundaries[d] = j.at("boundaries").at(d).get<std::vector<double>>();
            model = std::move(m);
        } else {
            throw InvalidInput("unknown model kind '" + kind + "'");
        }
        model->norm = normalizer_from(j.at("normalization"));
        const json& tensors = j.at("parameters");
        for (const auto& b : model->params.blocks()) {
            const json& t = tensors.at(b.name);
            if (t.at("shape").at(0).get<int>() != b.rows || t.at("shape").at(1).get<int>() != b.cols) {
                throw InvalidInput("parameter '" + b.name + "' has the wrong shape");
            }
            const auto data = t.at("data").get<std::vector<double>>();
            if (data.size() != b.size()) throw InvalidInput("parameter '" + b.name + "' has the wrong length");
            for (int r = 0; r < b.rows; ++r) {
                for (int c = 0; c < b.cols; ++c) {
                    model->params.values[b.offset + static_cast<std::size_t>(c) * b.rows + r] =
                        data[static_cast<std::size_t>(r) * b.cols + c];
                }
            }
        }
        return model;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed model JSON: ") + e.what());
    }
}

void save_model(const std::string& path, const Model& model) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << model_to_json(model) << '\n';
}

std::unique_ptr<Model> load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace ffsteer::learning
