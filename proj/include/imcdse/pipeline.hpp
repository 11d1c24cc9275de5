#pragma once
#include <string>
#include <vector>

#include <json.hpp>

namespace imcdse {

// Stage runner behind the CLI. A config is one JSON document; every stage
// reads the sections it needs and writes its files under cfg["out"].
//
// Seed derivation from cfg["seed"] = s:
//   training dataset mix_seed(s, 1), holdout mix_seed(s, 2),
//   explore base mix_seed(s, 3), mc corner c mix_seed(s, 4, c),
//   stochastic classifier backend c mix_seed(s, 5, c), bench mix_seed(s, 6).
// The classifier task keeps its own frozen seed (dnn.task.seed).

nlohmann::json default_config();

// RFC 7386 merge of patch onto base; keys absent from the defaults are rejected
nlohmann::json merge_config(const nlohmann::json& base, const nlohmann::json& patch);

extern const char* const kStages[9];
bool is_stage(const std::string& name);

// Returns {"inputs": [...], "outputs": [...], "seeds": {...}, "summary": {...}, "timings_s": {...}}.
nlohmann::json run_stage(const std::string& name, const nlohmann::json& cfg);

} // namespace imcdse
