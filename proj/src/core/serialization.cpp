#include "serialization.hpp"

#include <fstream>
#include <string>

namespace rewarddance {

namespace {

template <typename T>
T field(const Json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end()) {
        fail(ErrorCode::Parse, std::string("missing field '") + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const Json::exception& e) {
        fail(ErrorCode::Parse, std::string("field '") + key + "': " + e.what());
    }
}

template <typename T>
std::optional<T> optional_field(const Json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    try {
        return it->get<T>();
    } catch (const Json::exception& e) {
        fail(ErrorCode::Parse, std::string("field '") + key + "': " + e.what());
    }
}

Json nullable(const std::optional<std::string>& v) { return v ? Json(*v) : Json(nullptr); }
Json nullable(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

} // namespace

Json to_json(const Candidate& c)
{
    return Json {
        { "id", c.id },
        { "features", c.features },
        { "media_ref", nullable(c.media_ref) },
        { "oracle_quality", nullable(c.oracle_quality) },
    };
}

Candidate candidate_from_json(const Json& j)
{
    Candidate c;
    c.id = field<std::string>(j, "id");
    c.features = field<Vector>(j, "features");
    c.media_ref = optional_field<std::string>(j, "media_ref");
    c.oracle_quality = optional_field<double>(j, "oracle_quality");
    return c;
}

Json to_json(const PreferencePair& p)
{
    return Json {
        { "prompt_id", p.prompt.id },
        { "prompt_text", p.prompt.text },
        { "condition", p.prompt.condition },
        { "chosen", to_json(p.chosen) },
        { "rejected", to_json(p.rejected) },
        { "split", to_string(p.split) },
        { "reasoning", nullable(p.reasoning) },
    };
}

PreferencePair pair_from_json(const Json& j)
{
    PreferencePair p;
    p.prompt.id = field<std::string>(j, "prompt_id");
    p.prompt.text = field<std::string>(j, "prompt_text");
    p.prompt.condition = field<int>(j, "condition");
    p.chosen = candidate_from_json(field<Json>(j, "chosen"));
    p.rejected = candidate_from_json(field<Json>(j, "rejected"));
    p.split = split_from_string(field<std::string>(j, "split"));
    p.reasoning = optional_field<std::string>(j, "reasoning");
    return p;
}

Json to_json(const Instruction& i)
{
    return Json { { "template_id", i.template_id }, { "text", i.text }, { "cot_order", to_string(i.cot_order) } };
}

Instruction instruction_from_json(const Json& j)
{
    Instruction i;
    i.template_id = field<std::string>(j, "template_id");
    i.text = field<std::string>(j, "text");
    i.cot_order = cot_order_from_string(field<std::string>(j, "cot_order"));
    return i;
}

Json to_json(const RewardScore& s)
{
    Json j { { "value", s.value }, { "normalization", to_string(s.normalization) } };
    j["decision_token_logits"] = s.decision_token_logits ? Json(*s.decision_token_logits) : Json(nullptr);
    return j;
}

RewardScore reward_score_from_json(const Json& j)
{
    RewardScore s;
    s.value = field<double>(j, "value");
    s.normalization = normalization_from_string(field<std::string>(j, "normalization"));
    s.decision_token_logits = optional_field<std::map<std::string, double>>(j, "decision_token_logits");
    return s;
}

Json to_json(const GsbTally& t)
{
    return Json { { "good", t.good }, { "same", t.same }, { "bad", t.bad } };
}

GsbTally gsb_tally_from_json(const Json& j)
{
    return GsbTally { field<std::size_t>(j, "good"), field<std::size_t>(j, "same"), field<std::size_t>(j, "bad") };
}

void write_pairs_jsonl(std::ostream& out, const std::vector<PreferencePair>& pairs)
{
    for (const auto& p : pairs) {
        out << to_json(p).dump() << '\n';
    }
}

std::vector<PreferencePair> read_pairs_jsonl(std::istream& in)
{
    std::vector<PreferencePair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            pairs.push_back(pair_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            fail(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            fail(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return pairs;
}

void save_pairs(const std::filesystem::path& path, const std::vector<PreferencePair>& pairs)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    write_pairs_jsonl(out, pairs);
}

std::vector<PreferencePair> load_pairs(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    return read_pairs_jsonl(in);
}

} // namespace rewarddance
