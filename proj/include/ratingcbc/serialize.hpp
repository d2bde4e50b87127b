#pragma once

#include "ratingcbc/choice_model.hpp"
#include "ratingcbc/design.hpp"
#include "ratingcbc/exp_mf.hpp"
#include "ratingcbc/ratings.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace ratingcbc {

using json = nlohmann::ordered_json;

json to_json(const Attribute& a);
Attribute attribute_from_json(const json& j);

/// {attributes, profiles:[{id, levels:{name: index}, histogram:{counts}}], choice_sets, seed}
json to_json(const Design& d);
Design design_from_json(const json& j);

json to_json(const DesignDiagnostics& d);

json to_json(const LevelPlan& plan);
LevelPlan level_plan_from_json(const json& j);

/// Coefficient rows (reference levels flagged as baseline) plus likelihood statistics.
json to_json(const Design& design, const MnlFit& fit);
json to_json(const Design& design, const std::map<Group, MnlFit>& fits);

json to_json(const Hyperparams& h);
Hyperparams hyperparams_from_json(const json& j, Hyperparams defaults = {});

json to_json(const FactorModel& m, const Hyperparams& h, double final_loss);
FactorModel factor_model_from_json(const json& j);

/// Two-space indented text with a trailing newline.
std::string dump(const json& j);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace ratingcbc
