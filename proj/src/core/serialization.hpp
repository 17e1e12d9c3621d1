#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "types.hpp"

namespace rewarddance {

using Json = nlohmann::json;

Json to_json(const Candidate& c);
Candidate candidate_from_json(const Json& j);

// One PreferencePair per JSONL line with the flat prompt fields
// prompt_id, prompt_text, condition next to chosen/rejected/split/reasoning.
Json to_json(const PreferencePair& p);
PreferencePair pair_from_json(const Json& j);

Json to_json(const Instruction& i);
Instruction instruction_from_json(const Json& j);

Json to_json(const RewardScore& s);
RewardScore reward_score_from_json(const Json& j);

Json to_json(const GsbTally& t);
GsbTally gsb_tally_from_json(const Json& j);

void write_pairs_jsonl(std::ostream& out, const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> read_pairs_jsonl(std::istream& in);

void save_pairs(const std::filesystem::path& path, const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> load_pairs(const std::filesystem::path& path);

} // namespace rewarddance
