#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace rewarddance {

using Vector = std::vector<double>;

struct Prompt {
    std::string id;
    std::string text;
    int condition = 0;

    bool operator==(const Prompt&) const = default;
};

// A generated sample. oracle_quality is ground-truth metadata used only by
// the oracle backend and by evaluation; trainable scorers never read it.
struct Candidate {
    std::string id;
    Vector features;
    std::optional<std::string> media_ref;
    std::optional<double> oracle_quality;

    bool operator==(const Candidate&) const = default;
};

enum class CotOrder { None, DecisionFirst, ReasoningFirst };

struct Instruction {
    std::string template_id;
    std::string text;
    CotOrder cot_order = CotOrder::DecisionFirst;

    bool operator==(const Instruction&) const = default;
};

enum class Split { Train, ID, OOD };

struct PreferencePair {
    Prompt prompt;
    Candidate chosen;
    Candidate rejected;
    Split split = Split::Train;
    std::optional<std::string> reasoning;

    bool operator==(const PreferencePair&) const = default;
};

enum class Normalization { FullVocab, YesNoPair };

// Probability-valued reward. When normalization is YesNoPair and logits are
// stored, value == exp(yes) / (exp(yes) + exp(no)).
struct RewardScore {
    double value = 0.5;
    std::optional<std::map<std::string, double>> decision_token_logits;
    Normalization normalization = Normalization::YesNoPair;

    static RewardScore from_probability(double p);
    static RewardScore from_yes_no(double yes_logit, double no_logit);

    bool operator==(const RewardScore&) const = default;
};

struct GsbTally {
    std::size_t good = 0;
    std::size_t same = 0;
    std::size_t bad = 0;

    std::size_t total() const { return good + same + bad; }
    bool operator==(const GsbTally&) const = default;
};

// Numerically stable logistic and log-sigmoid.
double sigmoid(double x);
double log_sigmoid(double x);

// Two-token softmax of the "yes" logit. Shift invariant by construction.
double yes_no_probability(double yes_logit, double no_logit);

const char* to_string(Split s);
Split split_from_string(std::string_view s);
const char* to_string(CotOrder o);
CotOrder cot_order_from_string(std::string_view s);
const char* to_string(Normalization n);
Normalization normalization_from_string(std::string_view s);

struct Violation {
    std::size_t pair_index = 0;
    std::string kind;
    std::string message;
};

// Report-style check. An empty result means the dataset is valid.
std::vector<Violation> validate_dataset(const std::vector<PreferencePair>& pairs, std::size_t dim);

std::vector<PreferencePair> filter_split(const std::vector<PreferencePair>& pairs, Split split);

} // namespace rewarddance
