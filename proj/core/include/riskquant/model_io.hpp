#pragma once

#include <string>
#include <variant>

#include "riskquant/trainers.hpp"

namespace riskquant {

std::string to_json(const VarModel& model);
std::string to_json(const EsModel& model);

VarModel var_model_from_json(const std::string& text);
EsModel es_model_from_json(const std::string& text);

using AnyModel = std::variant<VarModel, EsModel>;
/// Dispatches on the "kind" tag.
AnyModel model_from_json(const std::string& text);

void save_model_file(const VarModel& model, const std::string& path);
void save_model_file(const EsModel& model, const std::string& path);
AnyModel load_model_file(const std::string& path);

}  // namespace riskquant
