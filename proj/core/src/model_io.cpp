#include "riskquant/model_io.hpp"

#include <fstream>
#include <sstream>

#include "riskquant/errors.hpp"
#include "json.hpp"

namespace riskquant {

namespace {

nlohmann::ordered_json transform_json(const MonotoneTransform& t) {
    nlohmann::ordered_json j;
    j["kind"] = t.kind == MonotoneTransform::Kind::Identity ? "identity" : "scaled_tanh";
    if (t.kind == MonotoneTransform::Kind::ScaledTanh) j["scale"] = t.scale;
    return j;
}

MonotoneTransform transform_from_json(const nlohmann::json& j) {
    MonotoneTransform t;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity") {
        t.kind = MonotoneTransform::Kind::Identity;
    } else if (kind == "scaled_tanh") {
        t.kind = MonotoneTransform::Kind::ScaledTanh;
        t.scale = j.at("scale").get<double>();
    } else {
        throw IoError("unknown transform kind '" + kind + "'");
    }
    return t;
}

nlohmann::ordered_json var_json(const VarModel& model) {
    nlohmann::ordered_json j;
    j["kind"] = "var";
    if (const auto* single = std::get_if<SingleAlphaMode>(&model.mode)) {
        j["mode"] = "single";
        j["alpha"] = single->alpha;
    } else if (const auto* cont = std::get_if<ContinuumMode>(&model.mode)) {
        j["mode"] = "continuum";
        j["alpha_range"] = {cont->lo, cont->hi};
    } else {
        j["mode"] = "interp";
        j["grid"] = std::get<InterpMode>(model.mode).grid.knots;
    }
    j["transform"] = transform_json(model.transform);
    j["network"] = nlohmann::ordered_json::parse(model.net.to_json());
    return j;
}

VarModel var_from_json(const nlohmann::json& j) {
    std::string mode = j.at("mode").get<std::string>();
    VarMode m = SingleAlphaMode{0.5};
    if (mode == "single") {
        m = SingleAlphaMode{j.at("alpha").get<double>()};
    } else if (mode == "continuum") {
        auto range = j.at("alpha_range").get<std::vector<double>>();
        if (range.size() != 2) throw IoError("alpha_range must have two entries");
        m = ContinuumMode{range[0], range[1]};
    } else if (mode == "interp") {
        m = InterpMode{nn::InterpGrid(j.at("grid").get<std::vector<double>>())};
    } else {
        throw IoError("unknown var model mode '" + mode + "'");
    }
    return VarModel{std::move(m), nn::Network::from_json(j.at("network").dump()),
                    transform_from_json(j.at("transform"))};
}

nlohmann::ordered_json es_json(const EsModel& model) {
    nlohmann::ordered_json j;
    j["kind"] = "es";
    j["alpha"] = model.alpha.value;
    if (model.trunc.bound) {
        j["trunc"] = *model.trunc.bound;
    } else {
        j["trunc"] = nullptr;
    }
    j["affine"] = {{"tau", model.transform.tau}, {"nu", model.transform.nu}};
    if (model.var_model) {
        j["var_model"] = var_json(*model.var_model);
    } else {
        j["var_model"] = nullptr;
    }
    j["increment_network"] = nlohmann::ordered_json::parse(model.increment_net.to_json());
    return j;
}

EsModel es_from_json(const nlohmann::json& j) {
    AlphaLevel alpha(j.at("alpha").get<double>());
    TruncationBound trunc = j.at("trunc").is_null()
                                ? TruncationBound::none()
                                : TruncationBound(j.at("trunc").get<double>());
    AffineTransform affine{j.at("affine").at("tau").get<double>(),
                           j.at("affine").at("nu").get<double>()};
    std::optional<VarModel> var;
    if (!j.at("var_model").is_null()) var = var_from_json(j.at("var_model"));
    return EsModel{std::move(var),
                   nn::Network::from_json(j.at("increment_network").dump()), alpha, trunc,
                   affine};
}

}  // namespace

std::string to_json(const VarModel& model) { return var_json(model).dump(); }
std::string to_json(const EsModel& model) { return es_json(model).dump(); }

VarModel var_model_from_json(const std::string& text) {
    return var_from_json(nlohmann::json::parse(text));
}

EsModel es_model_from_json(const std::string& text) {
    return es_from_json(nlohmann::json::parse(text));
}

AnyModel model_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "var") return var_from_json(j);
    if (kind == "es") return es_from_json(j);
    throw IoError("unknown model kind '" + kind + "'");
}

namespace {
void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text << "\n";
}
}  // namespace

void save_model_file(const VarModel& model, const std::string& path) {
    write_file(path, to_json(model));
}

void save_model_file(const EsModel& model, const std::string& path) {
    write_file(path, to_json(model));
}

AnyModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace riskquant
