#include "rewarddance/rewarddance.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bon/bon.hpp"
#include "core/config.hpp"
#include "core/hash.hpp"
#include "core/serialization.hpp"
#include "diffusion/flow.hpp"
#include "eval/eval.hpp"
#include "refl/refl.hpp"
#include "remote/client.hpp"
#include "report/report.hpp"
#include "rmtrain/rm_train.hpp"
#include "scorer/oracle_backend.hpp"
#include "scorer/reward_model.hpp"
#include "tts/search.hpp"

using namespace rewarddance;

struct rd_config {
    Config value;
};

struct rd_dataset {
    std::vector<PreferencePair> pairs;
};

struct rd_reward_model {
    RewardModel value;
};

struct rd_backend {
    BackendPtr value;
};

struct rd_flow {
    FlowModel value;
};

namespace {

thread_local std::string g_last_error;

rd_status status_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return RD_ERR_INVALID_ARGUMENT;
    case ErrorCode::Dimension: return RD_ERR_DIMENSION;
    case ErrorCode::NonFinite: return RD_ERR_NON_FINITE;
    case ErrorCode::Empty: return RD_ERR_EMPTY;
    case ErrorCode::Io: return RD_ERR_IO;
    case ErrorCode::Parse: return RD_ERR_PARSE;
    case ErrorCode::Config: return RD_ERR_CONFIG;
    case ErrorCode::Scoring: return RD_ERR_SCORING;
    case ErrorCode::NotDifferentiable: return RD_ERR_NOT_DIFFERENTIABLE;
    case ErrorCode::Diverged: return RD_ERR_DIVERGED;
    case ErrorCode::RemoteTimeout: return RD_ERR_REMOTE_TIMEOUT;
    case ErrorCode::RemoteHttp: return RD_ERR_REMOTE_HTTP;
    case ErrorCode::RemoteMalformed: return RD_ERR_REMOTE_MALFORMED;
    case ErrorCode::RemoteNoDecision: return RD_ERR_REMOTE_NO_DECISION;
    case ErrorCode::PortBinding: return RD_ERR_PORT_BINDING;
    case ErrorCode::Internal: return RD_ERR_INTERNAL;
    }
    return RD_ERR_INTERNAL;
}

template <typename Fn>
rd_status guarded(Fn&& fn)
{
    try {
        fn();
        g_last_error.clear();
        return RD_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_for(e.code());
    } catch (const Json::exception& e) {
        g_last_error = std::string("JSON error: ") + e.what();
        return RD_ERR_PARSE;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return RD_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RD_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return RD_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what)
{
    require(p != nullptr, ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

char* dup(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void emit(char** out, const std::string& s)
{
    if (out) {
        *out = dup(s);
    }
}

struct CandidateLine {
    Prompt prompt;
    Candidate candidate;
};

Json candidate_line(const Prompt& p, const Candidate& c)
{
    return Json { { "prompt_id", p.id }, { "prompt_text", p.text }, { "condition", p.condition }, { "candidate", to_json(c) } };
}

std::vector<CandidateLine> read_candidate_lines(const std::string& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path);
    std::vector<CandidateLine> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const Json j = Json::parse(line);
            CandidateLine c;
            c.prompt.id = j.at("prompt_id").get<std::string>();
            c.prompt.text = j.value("prompt_text", std::string());
            c.prompt.condition = j.at("condition").get<int>();
            c.candidate = candidate_from_json(j.at("candidate"));
            out.push_back(std::move(c));
        } catch (const Json::exception& e) {
            fail(ErrorCode::Parse, path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    require(!out.empty(), ErrorCode::Empty, path + " has no candidates");
    return out;
}

QualityModel oracle_quality_model(const Config& c)
{
    const auto dim = c.get_uint("oracle.dim", c.get_uint("data.dim", 8));
    const auto classes = c.get_uint("oracle.num_classes", c.get_uint("data.num_classes", 4));
    const double radius = c.get_double("oracle.radius", c.get_double("data.radius", 2.0));
    const double tau = c.get_double("oracle.tau", c.get_double("data.quality_tau", 1.0));
    if (dim == 0) c.invalid("oracle.dim", "must be >= 1");
    if (classes == 0) c.invalid("oracle.num_classes", "must be >= 1");
    if (!(tau > 0.0)) c.invalid("oracle.tau", "must be > 0");
    return QualityModel { Mixture::standard(dim, classes, radius), tau };
}

Mixture flow_mixture(const Config& c)
{
    const auto dim = c.get_uint("flow.dim", 2);
    const auto classes = c.get_uint("flow.num_classes", 2);
    if (dim == 0) c.invalid("flow.dim", "must be >= 1");
    if (classes == 0) c.invalid("flow.num_classes", "must be >= 1");
    const double stddev = c.get_double("flow.stddev", 0.5);
    if (!(stddev > 0.0)) c.invalid("flow.stddev", "must be > 0");
    return Mixture::standard(dim, classes, c.get_double("flow.radius", 2.0), stddev);
}

ScoreRequest request_from_json(const Json& j)
{
    Prompt p { j.at("prompt_id").get<std::string>(), j.value("prompt_text", std::string()), j.at("condition").get<int>() };
    const bool pairwise = j.contains("candidate_b") && !j.at("candidate_b").is_null();
    const Instruction ins = j.contains("instruction") ? instruction_from_json(j.at("instruction")) : default_instruction(pairwise);
    const Candidate a = candidate_from_json(j.at("candidate_a"));
    return pairwise ? make_pairwise_request(p, a, candidate_from_json(j.at("candidate_b")), ins)
                    : make_pointwise_request(p, a, ins);
}

} // namespace

extern "C" {

const char* rd_version(void)
{
    return "0.1.0";
}

const char* rd_status_name(rd_status status)
{
    switch (status) {
    case RD_OK: return "ok";
    case RD_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case RD_ERR_DIMENSION: return "dimension";
    case RD_ERR_NON_FINITE: return "non_finite";
    case RD_ERR_EMPTY: return "empty";
    case RD_ERR_IO: return "io";
    case RD_ERR_PARSE: return "parse";
    case RD_ERR_CONFIG: return "config";
    case RD_ERR_SCORING: return "scoring";
    case RD_ERR_NOT_DIFFERENTIABLE: return "not_differentiable";
    case RD_ERR_DIVERGED: return "diverged";
    case RD_ERR_REMOTE_TIMEOUT: return "remote_timeout";
    case RD_ERR_REMOTE_HTTP: return "remote_http";
    case RD_ERR_REMOTE_MALFORMED: return "remote_malformed";
    case RD_ERR_REMOTE_NO_DECISION: return "remote_no_decision";
    case RD_ERR_PORT_BINDING: return "port_binding";
    case RD_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* rd_last_error(void)
{
    return g_last_error.c_str();
}

void rd_string_free(char* s)
{
    std::free(s);
}

rd_status rd_set_log_level(const char* level)
{
    return guarded([&] {
        need(level, "level");
        const auto lvl = spdlog::level::from_str(level);
        require(lvl != spdlog::level::off || std::strcmp(level, "off") == 0, ErrorCode::InvalidArgument,
            std::string("unknown log level '") + level + "'");
        static const auto logger = [] {
            auto l = spdlog::stderr_color_mt("rewarddance");
            spdlog::set_default_logger(l);
            return l;
        }();
        logger->set_level(lvl);
    });
}

rd_status rd_config_new(rd_config** out)
{
    return guarded([&] {
        need(out, "out");
        *out = new rd_config { Config {} };
    });
}

rd_status rd_config_load(const char* path, rd_config** out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new rd_config { Config::load(path) };
    });
}

rd_status rd_config_set(rd_config* cfg, const char* key, const char* value)
{
    return guarded([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(value, "value");
        require(*key != '\0', ErrorCode::Config, "config key must not be empty");
        cfg->value.set(key, value);
    });
}

rd_status rd_config_get(const rd_config* cfg, const char* key, const char* fallback, char** out)
{
    return guarded([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(out, "out");
        *out = dup(cfg->value.get_string(key, fallback ? fallback : ""));
    });
}

rd_status rd_config_dump(const rd_config* cfg, char** out)
{
    return guarded([&] {
        need(cfg, "cfg");
        need(out, "out");
        *out = dup(cfg->value.dump());
    });
}

void rd_config_free(rd_config* cfg)
{
    delete cfg;
}

rd_status rd_dataset_generate(const rd_config* cfg, rd_dataset** out)
{
    return guarded([&] {
        need(cfg, "cfg");
        need(out, "out");
        auto data = generate_synthetic(SyntheticSpec::from_config(cfg->value));
        *out = new rd_dataset { std::move(data.pairs) };
    });
}

rd_status rd_dataset_load(const char* path, rd_dataset** out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new rd_dataset { load_pairs(path) };
    });
}

rd_status rd_dataset_save(const rd_dataset* ds, const char* path)
{
    return guarded([&] {
        need(ds, "dataset");
        need(path, "path");
        save_pairs(path, ds->pairs);
    });
}

rd_status rd_dataset_size(const rd_dataset* ds, size_t* out)
{
    return guarded([&] {
        need(ds, "dataset");
        need(out, "out");
        *out = ds->pairs.size();
    });
}

rd_status rd_dataset_validate(const rd_dataset* ds, size_t dim, char** out_json)
{
    return guarded([&] {
        need(ds, "dataset");
        need(out_json, "out_json");
        Json arr = Json::array();
        for (const auto& v : validate_dataset(ds->pairs, dim)) {
            arr.push_back(Json { { "pair_index", v.pair_index }, { "kind", v.kind }, { "message", v.message } });
        }
        *out_json = dup(arr.dump());
    });
}

void rd_dataset_free(rd_dataset* ds)
{
    delete ds;
}

rd_status rd_reward_model_train(const rd_config* cfg, const rd_dataset* ds, rd_reward_model** out, char** out_stats_json)
{
    return guarded([&] {
        need(cfg, "cfg");
        need(ds, "dataset");
        need(out, "out");
        const auto tc = TrainConfig::from_config(cfg->value);
        const auto spec = SyntheticSpec::from_config(cfg->value);
        auto result = train_reward_model(tc, ds->pairs, spec.dim, spec.num_classes);
        emit(out_stats_json,
            Json { { "epoch_losses", result.stats.epoch_losses }, { "examples_seen", result.stats.examples_seen } }.dump());
        *out = new rd_reward_model { std::move(result.model) };
    });
}

rd_status rd_reward_model_load(const char* path, rd_reward_model** out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new rd_reward_model { load_reward_model(path) };
    });
}

rd_status rd_reward_model_save(const rd_reward_model* rm, const char* path)
{
    return guarded([&] {
        need(rm, "reward model");
        need(path, "path");
        save_reward_model(path, rm->value);
    });
}

rd_status rd_reward_model_info(const rd_reward_model* rm, char** out_json)
{
    return guarded([&] {
        need(rm, "reward model");
        need(out_json, "out_json");
        const auto& s = rm->value.shape();
        *out_json = dup(Json { { "paradigm", to_string(s.paradigm) }, { "dim", s.dim }, { "num_classes", s.num_classes },
            { "layer_sizes", rm->value.net().layer_sizes() }, { "parameters", rm->value.net().weights().size() } }
                            .dump());
    });
}

void rd_reward_model_free(rd_reward_model* rm)
{
    delete rm;
}

rd_status rd_backend_from_reward_model(const rd_reward_model* rm, const char* normalization, rd_backend** out)
{
    return guarded([&] {
        need(rm, "reward model");
        need(out, "out");
        const auto norm = normalization ? normalization_from_string(normalization) : Normalization::YesNoPair;
        *out = new rd_backend { std::make_shared<ToyBackend>(rm->value, norm) };
    });
}

rd_status rd_backend_oracle(const rd_config* cfg, const char* mode, rd_backend** out)
{
    return guarded([&] {
        need(mode, "mode");
        need(out, "out");
        const std::string m = mode;
        require(m == "hard" || m == "soft", ErrorCode::InvalidArgument, "oracle mode must be 'hard' or 'soft'");
        std::optional<QualityModel> qm;
        if (cfg) {
            qm = oracle_quality_model(cfg->value);
        }
        *out = new rd_backend { std::make_shared<OracleBackend>(m == "hard" ? OracleMode::Hard : OracleMode::Soft, qm) };
    });
}

rd_status rd_backend_remote(const rd_config* cfg, const char* normalization, rd_backend** out)
{
    return guarded([&] {
        need(cfg, "cfg");
        need(out, "out");
        const auto norm = normalization ? normalization_from_string(normalization) : Normalization::YesNoPair;
        std::optional<PromptTemplate> tmpl;
        if (const auto path = cfg->value.find("remote.template_file")) {
            tmpl = load_template(*path);
        }
        auto client = std::make_shared<RemoteClient>(RemoteConfig::from_config(cfg->value));
        *out = new rd_backend { std::make_shared<RemoteBackend>(client, norm, tmpl) };
    });
}

rd_status rd_backend_symmetrize(const rd_backend* inner, rd_backend** out)
{
    return guarded([&] {
        need(inner, "backend");
        need(out, "out");
        *out = new rd_backend { swap_symmetrize(inner->value) };
    });
}

rd_status rd_backend_name(const rd_backend* be, char** out)
{
    return guarded([&] {
        need(be, "backend");
        need(out, "out");
        *out = dup(be->value->name());
    });
}

rd_status rd_backend_score(const rd_backend* be, const char* request_json, char** out_json)
{
    return guarded([&] {
        need(be, "backend");
        need(request_json, "request_json");
        need(out_json, "out_json");
        const auto req = request_from_json(Json::parse(request_json));
        const auto score = req.pairwise() ? be->value->score_pairwise(req) : be->value->score_pointwise(req);
        *out_json = dup(to_json(score).dump());
    });
}

void rd_backend_free(rd_backend* be)
{
    delete be;
}

rd_status rd_eval_accuracy(const rd_backend* be, const rd_dataset* ds, const char* split, size_t threads, char** out_json)
{
    return guarded([&] {
        need(be, "backend");
        need(ds, "dataset");
        need(split, "split");
        need(out_json, "out_json");
        const auto report = eval_accuracy(*be->value, ds->pairs, split_from_string(split), std::max<size_t>(1, threads));
        *out_json = dup(to_json(report).dump());
    });
}

rd_status rd_judge(const rd_backend* be, const rd_dataset* ds, double tau, char** out_json)
{
    return guarded([&] {
        need(be, "backend");
        need(ds, "dataset");
        need(out_json, "out_json");
        require(!ds->pairs.empty(), ErrorCode::Empty, "nothing to judge");
        std::vector<JudgeVerdict> verdicts;
        Json arr = Json::array();
        for (const auto& p : ds->pairs) {
            verdicts.push_back(judge_pair(*be->value, p.prompt, p.chosen, p.rejected, tau));
            arr.push_back(to_json(verdicts.back()));
        }
        const auto t = tally(verdicts);
        *out_json = dup(Json { { "verdicts", arr }, { "tally", to_json(t) }, { "gsb", gsb_score(t) } }.dump());
    });
}

rd_status rd_scaling_report(const rd_config* cfg, const rd_dataset* ds, const size_t* widths, size_t n_widths, char** out_json)
{
    return guarded([&] {
        need(cfg, "cfg");
        need(ds, "dataset");
        need(widths, "widths");
        need(out_json, "out_json");
        const auto spec = SyntheticSpec::from_config(cfg->value);
        const auto rows = scaling_report(std::vector<std::size_t>(widths, widths + n_widths), ds->pairs, spec.dim,
            spec.num_classes, TrainConfig::from_config(cfg->value));
        Json arr = Json::array();
        for (const auto& r : rows) {
            arr.push_back(Json { { "width", r.width }, { "id_accuracy", r.id_accuracy }, { "ood_accuracy", r.ood_accuracy } });
        }
        *out_json = dup(arr.dump());
    });
}

rd_status rd_gsb_score(size_t good, size_t same, size_t bad, double* out)
{
    return guarded([&] {
        need(out, "out");
        *out = gsb_score(GsbTally { good, same, bad });
    });
}

rd_status rd_flow_train(const rd_config* cfg, rd_flow** out, char** out_stats_json)
{
    return guarded([&] {
        need(cfg, "cfg");
        need(out, "out");
        const auto fc = FlowTrainConfig::from_config(cfg->value);
        const auto mix = flow_mixture(cfg->value);
        const auto points = cfg->value.get_uint("flow.train_points", 2000);
        const auto data = mixture_dataset(mix, points, fc.seed);
        FlowTrainStats stats;
        auto model = train_flow(FlowModel::create(mix.dim(), mix.num_classes(), fc.hidden, fc.activation, fc.seed), data, fc, &stats);
        emit(out_stats_json, Json { { "batch_losses", stats.batch_losses } }.dump());
        *out = new rd_flow { std::move(model) };
    });
}

rd_status rd_flow_load(const char* path, rd_flow** out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new rd_flow { load_flow(path) };
    });
}

rd_status rd_flow_save(const rd_flow* flow, const char* path)
{
    return guarded([&] {
        need(flow, "flow");
        need(path, "path");
        save_flow(path, flow->value);
    });
}

rd_status rd_flow_num_classes(const rd_flow* flow, size_t* out)
{
    return guarded([&] {
        need(flow, "flow");
        need(out, "out");
        *out = flow->value.num_classes();
    });
}

rd_status rd_flow_export_samples(const rd_flow* flow, size_t n, size_t steps, uint64_t seed, const char* csv_path,
                                 const char* jsonl_path)
{
    return guarded([&] {
        need(flow, "flow");
        need(csv_path, "csv_path");
        const auto prompts = condition_prompts(flow->value.num_classes());
        std::vector<GeneratedSample> samples;
        std::ofstream jsonl;
        if (jsonl_path) {
            jsonl.open(jsonl_path);
            require(static_cast<bool>(jsonl), ErrorCode::Io, std::string("cannot open ") + jsonl_path + " for writing");
        }
        for (std::size_t i = 0; i < n; ++i) {
            const int c = static_cast<int>(i % flow->value.num_classes());
            const std::uint64_t s = derive_seed(seed, i);
            samples.push_back(GeneratedSample { sample(flow->value, c, steps, s).final_state(), c, s });
            if (jsonl_path) {
                Candidate cand;
                cand.id = "s" + std::to_string(i);
                cand.features = samples.back().x;
                jsonl << candidate_line(prompts[static_cast<std::size_t>(c)], cand).dump() << '\n';
            }
        }
        write_samples_csv(csv_path, samples);
        require(!jsonl_path || static_cast<bool>(jsonl), ErrorCode::Io, "failed writing candidates");
    });
}

rd_status rd_flow_mean_quality(const rd_flow* flow, const rd_config* cfg, size_t n, size_t steps, uint64_t seed, double* out)
{
    return guarded([&] {
        need(flow, "flow");
        need(cfg, "cfg");
        need(out, "out");
        const auto mix = flow_mixture(cfg->value);
        require(mix.dim() == flow->value.dim() && mix.num_classes() == flow->value.num_classes(), ErrorCode::Dimension,
            "flow.* mixture does not match the model");
        const double tau = cfg->value.get_double("oracle.tau", 0.5);
        if (!(tau > 0.0)) cfg->value.invalid("oracle.tau", "must be > 0");
        *out = mean_sample_quality(flow->value, QualityModel { mix, tau }, n, steps, seed);
    });
}

void rd_flow_free(rd_flow* flow)
{
    delete flow;
}

rd_status rd_bon_select(const rd_backend* be, const char* candidates_path, const char* mode, size_t k, size_t threads,
                        char** out_json)
{
    return guarded([&] {
        need(be, "backend");
        need(candidates_path, "candidates_path");
        need(mode, "mode");
        need(out_json, "out_json");
        const auto sel = select_mode_from_string(mode);
        const auto lines = read_candidate_lines(candidates_path);
        std::map<std::string, std::pair<Prompt, std::vector<Candidate>>> groups;
        for (const auto& l : lines) {
            auto& g = groups[l.prompt.id];
            g.first = l.prompt;
            g.second.push_back(l.candidate);
        }
        TournamentConfig tc;
        tc.threads = std::max<size_t>(1, threads);
        Json arr = Json::array();
        for (const auto& [id, g] : groups) {
            const auto result = run_tournament(be->value, g.first, g.second, default_instruction(true), tc);
            arr.push_back(Json { { "prompt_id", id }, { "mode", to_string(sel) }, { "k", k },
                { "selected", select(result, sel, k) }, { "tournament", to_json(result) } });
        }
        *out_json = dup(arr.dump());
    });
}

rd_status rd_refl_run(const rd_flow* flow, const rd_backend* be, const rd_config* cfg, const char* log_csv_path,
                      rd_flow** out_flow, char** out_json)
{
    return guarded([&] {
        need(flow, "flow");
        need(be, "backend");
        need(cfg, "cfg");
        need(log_csv_path, "log_csv_path");
        const auto rc = ReflConfig::from_config(cfg->value);
        auto result = run_refl(flow->value, be->value, rc);
        write_reward_log_csv(log_csv_path, result.log);
        Json refs = Json::object();
        for (const auto& [c, list] : result.references) {
            Json arr = Json::array();
            for (const auto& cand : list) {
                arr.push_back(to_json(cand));
            }
            refs[std::to_string(c)] = arr;
        }
        const auto n = result.log.size();
        const Json summary { { "iterations", n },
            { "final_window_mean", n ? result.log.window_mean.back() : 0.0 },
            { "final_window_std", n ? result.log.window_std.back() : 0.0 },
            { "aborted", result.aborted ? Json(*result.aborted) : Json(nullptr) }, { "references", refs } };
        emit(out_json, summary.dump());
        if (out_flow) {
            *out_flow = new rd_flow { std::move(result.model) };
        }
        if (result.aborted) {
            fail(ErrorCode::Diverged, "refl aborted at " + *result.aborted + "; log written to " + log_csv_path);
        }
    });
}

rd_status rd_detect_variance_collapse(const char* log_csv_path, size_t window, double threshold, char** out_json)
{
    return guarded([&] {
        need(log_csv_path, "log_csv_path");
        need(out_json, "out_json");
        const auto log = read_reward_log_csv(log_csv_path, std::max<size_t>(1, window));
        Json arr = Json::array();
        for (const auto& f : detect_variance_collapse(log, threshold)) {
            arr.push_back(Json { { "window_index", f.window_index }, { "begin", f.begin }, { "end", f.end },
                { "mean", f.mean }, { "std", f.std } });
        }
        *out_json = dup(arr.dump());
    });
}

rd_status rd_tts_search(const rd_flow* flow, const rd_backend* verifier, int condition, const rd_config* cfg,
                        const char* audit_jsonl_path, char** out_json)
{
    return guarded([&] {
        need(flow, "flow");
        need(verifier, "verifier");
        need(cfg, "cfg");
        require(condition >= 0 && static_cast<std::size_t>(condition) < flow->value.num_classes(), ErrorCode::InvalidArgument,
            "condition out of range");
        const auto sc = SearchConfig::from_config(cfg->value);
        const auto result = search(flow->value, *verifier->value, condition, sc);
        if (audit_jsonl_path) {
            write_audit_jsonl(audit_jsonl_path, result.audit);
        }
        if (result.aborted) {
            fail(ErrorCode::Scoring, "search aborted: " + *result.aborted);
        }
        emit(out_json, Json { { "best", to_json(*result.best) }, { "best_score", result.best_score },
                                { "checkpoints", result.audit.size() } }
                           .dump());
    });
}

rd_status rd_report_reward_curve(const char* log_csv_path, size_t smoothing_window, const char* title, const char* svg_path)
{
    return guarded([&] {
        need(log_csv_path, "log_csv_path");
        need(svg_path, "svg_path");
        const auto log = read_reward_log_csv(log_csv_path, std::max<size_t>(1, smoothing_window));
        write_text(svg_path, reward_curve_svg(log.rewards, std::max<size_t>(1, smoothing_window), title ? title : ""));
    });
}

rd_status rd_report_bubble_chart(const char* points_json, const char* title, const char* svg_path)
{
    return guarded([&] {
        need(points_json, "points_json");
        need(svg_path, "svg_path");
        std::vector<BubblePoint> points;
        for (const auto& p : Json::parse(points_json)) {
            points.push_back(BubblePoint { p.at("label").get<std::string>(), p.at("final_metric").get<double>(),
                p.at("late_variance").get<double>(), p.at("width").get<double>() });
        }
        write_text(svg_path, bubble_chart_svg(points, title ? title : ""));
    });
}

rd_status rd_report_scaling(const char* rows_json, const char* csv_path, const char* svg_path)
{
    return guarded([&] {
        need(rows_json, "rows_json");
        std::vector<ScalingRow> rows;
        for (const auto& r : Json::parse(rows_json)) {
            rows.push_back(ScalingRow { r.at("width").get<std::size_t>(), r.at("id_accuracy").get<double>(),
                r.at("ood_accuracy").get<double>() });
        }
        if (csv_path) {
            write_scaling_csv(csv_path, rows);
        }
        if (svg_path) {
            write_text(svg_path, scaling_svg(rows, "reward model scaling"));
        }
    });
}

rd_status rd_hash_file(const char* path, char** out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = dup(git_blob_sha1_file(path));
    });
}

rd_status rd_self_test(int* out_passed, char** out_json)
{
    return guarded([&] {
        need(out_passed, "out_passed");
        Json checks = Json::array();
        bool all = true;
        auto check = [&](const std::string& name, bool ok, double value) {
            checks.push_back(Json { { "check", name }, { "passed", ok }, { "value", value } });
            all = all && ok;
        };
        check("bt_loss_equal_rewards", std::abs(bt_loss(0.3, 0.3) - std::numbers::ln2) <= 1e-12, bt_loss(0.3, 0.3));
        const double p = RewardScore::from_yes_no(2.0, 0.0).value;
        check("yes_no_pair_logits_2_0", std::abs(p - 1.0 / (1.0 + std::exp(-2.0))) <= 1e-12, p);
        const double g = gsb_score(GsbTally { 49, 30, 21 });
        check("gsb_49_30_21", g == 0.28, g);

        auto hard = std::make_shared<OracleBackend>(OracleMode::Hard);
        std::vector<Candidate> cands;
        for (double q : { 0.9, 0.1, 0.5, 0.7 }) {
            Candidate c;
            c.id = "c" + std::to_string(cands.size());
            c.features = { q };
            c.oracle_quality = q;
            cands.push_back(c);
        }
        const Prompt prompt { "self", "self test", 0 };
        const auto t = run_tournament(hard, prompt, cands, default_instruction(true));
        check("bon_oracle_ranking", t.ranked_ids() == std::vector<std::string> { "c0", "c3", "c2", "c1" },
            t.win_counts.front());

        SymmetrizedBackend sym(std::make_shared<OracleBackend>(OracleMode::Soft));
        const double ab = sym.score_pairwise(make_pairwise_request(prompt, cands[0], cands[2], default_instruction(true))).value;
        const double ba = sym.score_pairwise(make_pairwise_request(prompt, cands[2], cands[0], default_instruction(true))).value;
        check("symmetrized_sum", std::abs(ab + ba - 1.0) <= 1e-15, ab + ba);

        RewardLog hacked;
        hacked.window = 10;
        Rng rng(7);
        for (int w = 0; w < 10; ++w) {
            for (int i = 0; i < 10; ++i) {
                const double spread = w < 6 ? 0.2 : 0.2 * std::pow(0.1, w - 5);
                hacked.append(std::min(1.0, 0.1 * w) + spread * (uniform(rng, 0.0, 1.0) - 0.5));
            }
        }
        check("variance_collapse_flagged", !detect_variance_collapse(hacked, 0.2).empty(), 0.0);

        *out_passed = all ? 1 : 0;
        emit(out_json, checks.dump());
    });
}

} // extern "C"
