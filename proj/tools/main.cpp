// Command-line front end over the C interface.
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rewarddance/rewarddance.h"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitSelfTest = 3;

struct Failure {
    rd_status status;
    std::string message;
};

void check(rd_status s)
{
    if (s != RD_OK) {
        throw Failure { s, rd_last_error() };
    }
}

[[noreturn]] void usage_error(const std::string& message)
{
    throw Failure { RD_ERR_CONFIG, message };
}

std::string take(char* s)
{
    std::string out = s ? s : "";
    rd_string_free(s);
    return out;
}

template <typename T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(ptr); }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};

using ConfigHandle = Handle<rd_config, rd_config_free>;
using DatasetHandle = Handle<rd_dataset, rd_dataset_free>;
using ModelHandle = Handle<rd_reward_model, rd_reward_model_free>;
using BackendHandle = Handle<rd_backend, rd_backend_free>;
using FlowHandle = Handle<rd_flow, rd_flow_free>;

std::string utc_now()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm {};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hash_file(const fs::path& p)
{
    char* out = nullptr;
    check(rd_hash_file(p.string().c_str(), &out));
    return take(out);
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) {
        throw Failure { RD_ERR_IO, "cannot write " + path.string() };
    }
}

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = ".";
    std::string log_level = "warn";
};

// One manifest per output directory: written before the heavy work starts
// and rewritten with output hashes when the command finishes.
class Run {
public:
    Run(std::string command, const Common& common, bool needs_config)
        : command_(std::move(command))
        , out_(common.out_dir)
    {
        check(rd_set_log_level(common.log_level.c_str()));
        if (needs_config && common.config_path.empty()) {
            usage_error(command_ + " needs --config");
        }
        if (!common.config_path.empty()) {
            check(rd_config_load(common.config_path.c_str(), config_.out()));
            add_input(common.config_path);
        } else {
            check(rd_config_new(config_.out()));
        }
        for (const auto& kv : common.overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) {
                usage_error("--set expects key=value, got '" + kv + "'");
            }
            check(rd_config_set(config_.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
        }
        std::error_code ec;
        fs::create_directories(out_, ec);
        if (ec) {
            throw Failure { RD_ERR_IO, "cannot create " + out_.string() + ": " + ec.message() };
        }
        started_ = utc_now();
    }

    rd_config* config() const { return config_.get(); }
    fs::path out(const std::string& name) const { return out_ / name; }

    std::string get(const std::string& key, const std::string& fallback) const
    {
        char* s = nullptr;
        check(rd_config_get(config_.get(), key.c_str(), fallback.c_str(), &s));
        return take(s);
    }

    void add_input(const fs::path& p)
    {
        if (!fs::exists(p)) {
            throw Failure { RD_ERR_IO, "input " + p.string() + " does not exist" };
        }
        inputs_.push_back(p);
    }
    void add_output(const std::string& name) { outputs_.push_back(name); }

    void begin() { write_manifest("running"); }
    void finish(const std::string& status) { write_manifest(status); }

private:
    void write_manifest(const std::string& status)
    {
        char* dump = nullptr;
        check(rd_config_dump(config_.get(), &dump));
        const std::string snapshot = take(dump);
        Json seeds = Json::object();
        std::istringstream lines(snapshot);
        for (std::string line; std::getline(lines, line);) {
            const auto eq = line.find(" = ");
            if (eq != std::string::npos && line.compare(eq - 5, 5, ".seed") == 0) {
                seeds[line.substr(0, eq)] = line.substr(eq + 3);
            }
        }
        Json inputs = Json::array(), outputs = Json::array();
        for (const auto& p : inputs_) {
            inputs.push_back(Json { { "path", p.string() }, { "sha1", hash_file(p) } });
        }
        if (status != "running") {
            for (const auto& name : outputs_) {
                if (fs::exists(out_ / name)) {
                    outputs.push_back(Json { { "path", name }, { "sha1", hash_file(out_ / name) } });
                }
            }
        }
        const Json m { { "command", command_ }, { "status", status }, { "config", snapshot }, { "seeds", seeds },
            { "inputs", inputs }, { "outputs", outputs }, { "output_dir", out_.string() },
            { "timestamps", Json { { "started", started_ }, { "finished", status == "running" ? "" : utc_now() } } } };
        write_file(out_ / "manifest.json", m.dump(2) + "\n");
    }

    std::string command_;
    fs::path out_;
    ConfigHandle config_;
    std::string started_;
    std::vector<fs::path> inputs_;
    std::vector<std::string> outputs_;
};

struct BackendOptions {
    std::string kind = "toy";
    std::string model_path;
    std::string normalization = "yes_no_pair";
    bool symmetrize = false;
};

void add_backend_options(CLI::App* app, BackendOptions& b)
{
    app->add_option("--backend", b.kind, "toy, oracle-hard, oracle-soft or remote")
        ->check(CLI::IsMember({ "toy", "oracle-hard", "oracle-soft", "remote" }));
    app->add_option("--model", b.model_path, "reward model checkpoint for the toy backend");
    app->add_option("--normalization", b.normalization, "yes_no_pair or full_vocab")
        ->check(CLI::IsMember({ "yes_no_pair", "full_vocab" }));
    app->add_flag("--symmetrize", b.symmetrize, "average the two presentation orders");
}

void open_backend(Run& run, const BackendOptions& b, BackendHandle& out, std::optional<int>* width = nullptr)
{
    BackendHandle raw;
    if (b.kind == "toy") {
        if (b.model_path.empty()) {
            usage_error("the toy backend needs --model");
        }
        run.add_input(b.model_path);
        ModelHandle model;
        check(rd_reward_model_load(b.model_path.c_str(), model.out()));
        if (width) {
            char* info = nullptr;
            check(rd_reward_model_info(model.get(), &info));
            const auto sizes = Json::parse(take(info)).at("layer_sizes");
            if (sizes.size() > 2) {
                *width = sizes.at(1).get<int>();
            }
        }
        check(rd_backend_from_reward_model(model.get(), b.normalization.c_str(), raw.out()));
    } else if (b.kind == "remote") {
        check(rd_backend_remote(run.config(), b.normalization.c_str(), raw.out()));
    } else {
        check(rd_backend_oracle(run.config(), b.kind == "oracle-hard" ? "hard" : "soft", raw.out()));
    }
    if (b.symmetrize) {
        check(rd_backend_symmetrize(raw.get(), out.out()));
    } else {
        std::swap(out.ptr, raw.ptr);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& text)
{
    try {
        std::size_t used = 0;
        const auto v = std::stoull(text, &used);
        if (used == text.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    usage_error(key + ": expected a non-negative integer, got '" + text + "'");
}

int cmd_gen_data(const Common& c)
{
    Run run("gen-data", c, true);
    run.add_output("pairs.jsonl");
    run.begin();
    DatasetHandle ds;
    check(rd_dataset_generate(run.config(), ds.out()));
    check(rd_dataset_save(ds.get(), run.out("pairs.jsonl").string().c_str()));
    size_t n = 0;
    check(rd_dataset_size(ds.get(), &n));
    run.finish("ok");
    std::cout << "wrote " << n << " pairs to " << run.out("pairs.jsonl").string() << "\n";
    return kExitOk;
}

Json accuracy_for(const rd_backend* be, const rd_dataset* ds, const std::string& split, size_t threads)
{
    char* out = nullptr;
    check(rd_eval_accuracy(be, ds, split.c_str(), threads, &out));
    return Json::parse(take(out));
}

int cmd_train_rm(const Common& c, const std::string& data)
{
    Run run("train-rm", c, true);
    run.add_input(data);
    for (const char* name : { "reward_model.bin", "train_stats.json", "accuracy.json" }) {
        run.add_output(name);
    }
    run.begin();
    DatasetHandle ds;
    check(rd_dataset_load(data.c_str(), ds.out()));
    ModelHandle model;
    char* stats = nullptr;
    check(rd_reward_model_train(run.config(), ds.get(), model.out(), &stats));
    write_file(run.out("train_stats.json"), take(stats) + "\n");
    check(rd_reward_model_save(model.get(), run.out("reward_model.bin").string().c_str()));
    BackendHandle be;
    check(rd_backend_from_reward_model(model.get(), "yes_no_pair", be.out()));
    Json acc = Json::object();
    for (const char* split : { "id", "ood" }) {
        acc[split] = accuracy_for(be.get(), ds.get(), split, 1);
    }
    write_file(run.out("accuracy.json"), acc.dump(2) + "\n");
    run.finish("ok");
    std::printf("ID accuracy %.3f, OOD accuracy %.3f\n", acc["id"]["accuracy"].get<double>(),
        acc["ood"]["accuracy"].get<double>());
    return kExitOk;
}

int cmd_eval_rm(const Common& c, const std::string& data, const BackendOptions& b, const std::string& split, size_t threads)
{
    Run run("eval-rm", c, true);
    run.add_input(data);
    run.add_output("accuracy.json");
    run.begin();
    DatasetHandle ds;
    check(rd_dataset_load(data.c_str(), ds.out()));
    BackendHandle be;
    open_backend(run, b, be);
    Json acc = Json::object();
    for (const std::string& s : split == "all" ? std::vector<std::string> { "id", "ood" } : std::vector<std::string> { split }) {
        acc[s] = accuracy_for(be.get(), ds.get(), s, threads);
        std::printf("%s accuracy %.3f\n", s.c_str(), acc[s]["accuracy"].get<double>());
    }
    write_file(run.out("accuracy.json"), acc.dump(2) + "\n");
    run.finish("ok");
    return kExitOk;
}

int cmd_train_flow(const Common& c)
{
    Run run("train-flow", c, true);
    for (const char* name : { "flow.bin", "samples.csv", "candidates.jsonl", "flow_stats.json" }) {
        run.add_output(name);
    }
    run.begin();
    FlowHandle flow;
    char* stats = nullptr;
    check(rd_flow_train(run.config(), flow.out(), &stats));
    write_file(run.out("flow_stats.json"), take(stats) + "\n");
    check(rd_flow_save(flow.get(), run.out("flow.bin").string().c_str()));
    const auto n = parse_u64("flow.export_samples", run.get("flow.export_samples", "64"));
    const auto steps = parse_u64("flow.sample_steps", run.get("flow.sample_steps", "20"));
    const auto seed = parse_u64("flow.seed", run.get("flow.seed", "0"));
    check(rd_flow_export_samples(flow.get(), n, steps, seed, run.out("samples.csv").string().c_str(),
        run.out("candidates.jsonl").string().c_str()));
    run.finish("ok");
    std::cout << "wrote flow.bin and " << n << " samples to " << run.out("").string() << "\n";
    return kExitOk;
}

int cmd_bon_select(const Common& c, const std::string& candidates, const BackendOptions& b, const std::string& mode,
                   size_t k, size_t threads)
{
    Run run("bon-select", c, true);
    run.add_input(candidates);
    run.add_output("selection.json");
    run.begin();
    BackendHandle be;
    open_backend(run, b, be);
    char* out = nullptr;
    check(rd_bon_select(be.get(), candidates.c_str(), mode.c_str(), k, threads, &out));
    const auto result = Json::parse(take(out));
    write_file(run.out("selection.json"), result.dump(2) + "\n");
    run.finish("ok");
    for (const auto& r : result) {
        std::cout << r["prompt_id"].get<std::string>() << ":";
        for (const auto& id : r["selected"]) {
            std::cout << ' ' << id.get<std::string>();
        }
        std::cout << "\n";
    }
    return kExitOk;
}

int cmd_refl(const Common& c, const std::string& flow_path, const BackendOptions& b)
{
    Run run("refl", c, true);
    run.add_input(flow_path);
    for (const char* name : { "reward_log.csv", "flow_refl.bin", "refl_summary.json" }) {
        run.add_output(name);
    }
    run.begin();
    FlowHandle flow;
    check(rd_flow_load(flow_path.c_str(), flow.out()));
    BackendHandle be;
    std::optional<int> width;
    open_backend(run, b, be, &width);
    const auto n_eval = parse_u64("refl.eval_samples", run.get("refl.eval_samples", "500"));
    const auto steps = parse_u64("refl.sample_steps", run.get("refl.sample_steps", "20"));
    const auto eval_seed = parse_u64("refl.eval_seed", run.get("refl.eval_seed", "12345"));
    double before = 0.0, after = 0.0;
    check(rd_flow_mean_quality(flow.get(), run.config(), n_eval, steps, eval_seed, &before));
    FlowHandle tuned;
    char* summary_text = nullptr;
    const rd_status st = rd_refl_run(flow.get(), be.get(), run.config(), run.out("reward_log.csv").string().c_str(),
        tuned.out(), &summary_text);
    const std::string err = st == RD_OK ? "" : rd_last_error();
    Json summary = summary_text ? Json::parse(take(summary_text)) : Json::object();
    if (tuned.get()) {
        check(rd_flow_save(tuned.get(), run.out("flow_refl.bin").string().c_str()));
        check(rd_flow_mean_quality(tuned.get(), run.config(), n_eval, steps, eval_seed, &after));
    }
    summary["quality_before"] = before;
    summary["quality_after"] = after;
    summary["rm_width"] = width ? Json(*width) : Json(nullptr);
    summary["backend"] = b.kind;
    write_file(run.out("refl_summary.json"), summary.dump(2) + "\n");
    run.finish(st == RD_OK ? "ok" : "failed");
    if (st != RD_OK) {
        throw Failure { st, err };
    }
    std::printf("mean oracle quality %.4f -> %.4f over %zu iterations\n", before, after,
        summary["iterations"].get<std::size_t>());
    return kExitOk;
}

int cmd_tts(const Common& c, const std::string& flow_path, const BackendOptions& b, int condition)
{
    Run run("tts-search", c, true);
    run.add_input(flow_path);
    run.add_output("audit.jsonl");
    run.add_output("search.json");
    run.begin();
    FlowHandle flow;
    check(rd_flow_load(flow_path.c_str(), flow.out()));
    BackendHandle be;
    open_backend(run, b, be);
    char* out = nullptr;
    const rd_status st = rd_tts_search(flow.get(), be.get(), condition, run.config(), run.out("audit.jsonl").string().c_str(), &out);
    if (st != RD_OK) {
        const std::string err = rd_last_error();
        run.finish("failed");
        throw Failure { st, err };
    }
    const auto result = Json::parse(take(out));
    write_file(run.out("search.json"), result.dump(2) + "\n");
    run.finish("ok");
    std::printf("best %s score %.4f\n", result["best"]["id"].get<std::string>().c_str(), result["best_score"].get<double>());
    return kExitOk;
}

int cmd_judge(const Common& c, const std::string& data, const BackendOptions& b, double tau)
{
    Run run("judge", c, true);
    run.add_input(data);
    run.add_output("verdicts.json");
    run.begin();
    DatasetHandle ds;
    check(rd_dataset_load(data.c_str(), ds.out()));
    BackendHandle be;
    open_backend(run, b, be);
    char* out = nullptr;
    check(rd_judge(be.get(), ds.get(), tau, &out));
    const auto result = Json::parse(take(out));
    write_file(run.out("verdicts.json"), result.dump(2) + "\n");
    run.finish("ok");
    const auto& t = result["tally"];
    std::printf("good %d same %d bad %d gsb %.4f\n", t["good"].get<int>(), t["same"].get<int>(), t["bad"].get<int>(),
        result["gsb"].get<double>());
    return kExitOk;
}

int cmd_report(const Common& c, const std::vector<std::string>& runs, size_t window, const std::string& scaling_data,
               const std::vector<size_t>& widths)
{
    Run run("report", c, true);
    std::vector<std::string> missing;
    for (const auto& r : runs) {
        for (const char* f : { "reward_log.csv", "refl_summary.json" }) {
            if (!fs::exists(fs::path(r) / f)) {
                missing.push_back((fs::path(r) / f).string());
            }
        }
    }
    if (!scaling_data.empty() && !fs::exists(scaling_data)) {
        missing.push_back(scaling_data);
    }
    if (runs.empty() && scaling_data.empty()) {
        usage_error("report needs at least one --run or --scaling-data");
    }
    if (!missing.empty()) {
        std::string msg = "missing report inputs:";
        for (const auto& m : missing) {
            msg += "\n  " + m;
        }
        throw Failure { RD_ERR_IO, msg };
    }
    std::vector<std::pair<std::string, fs::path>> curves;
    for (const auto& r : runs) {
        run.add_input(fs::path(r) / "reward_log.csv");
        run.add_input(fs::path(r) / "refl_summary.json");
        std::string name = fs::path(r).filename().string();
        if (name.empty()) {
            name = fs::path(r).parent_path().filename().string();
        }
        curves.emplace_back(name, fs::path(r));
        run.add_output("reward_curve_" + name + ".svg");
    }
    if (runs.size() >= 2) {
        run.add_output("bubble_chart.svg");
    }
    if (!scaling_data.empty()) {
        run.add_input(scaling_data);
        run.add_output("scaling.csv");
        run.add_output("scaling.svg");
    }
    run.begin();
    const size_t smoothing = window ? window : parse_u64("refl.log_window", run.get("refl.log_window", "1000"));
    Json bubbles = Json::array();
    for (const auto& [name, dir] : curves) {
        check(rd_report_reward_curve((dir / "reward_log.csv").string().c_str(), smoothing, name.c_str(),
            run.out("reward_curve_" + name + ".svg").string().c_str()));
        std::ifstream in(dir / "refl_summary.json");
        const Json s = Json::parse(in);
        const double sd = s.value("final_window_std", 0.0);
        bubbles.push_back(Json { { "label", name }, { "final_metric", s.value("final_window_mean", 0.0) },
            { "late_variance", sd * sd }, { "width", s["rm_width"].is_number() ? s["rm_width"].get<double>() : 1.0 } });
    }
    if (runs.size() >= 2) {
        check(rd_report_bubble_chart(bubbles.dump().c_str(), "final reward vs late variance",
            run.out("bubble_chart.svg").string().c_str()));
    }
    if (!scaling_data.empty()) {
        if (widths.size() < 2) {
            usage_error("--widths needs at least two values");
        }
        DatasetHandle ds;
        check(rd_dataset_load(scaling_data.c_str(), ds.out()));
        char* rows = nullptr;
        check(rd_scaling_report(run.config(), ds.get(), widths.data(), widths.size(), &rows));
        check(rd_report_scaling(take(rows).c_str(), run.out("scaling.csv").string().c_str(),
            run.out("scaling.svg").string().c_str()));
    }
    run.finish("ok");
    std::cout << "report written to " << run.out("").string() << "\n";
    return kExitOk;
}

int cmd_self_test()
{
    int passed = 0;
    char* out = nullptr;
    check(rd_self_test(&passed, &out));
    for (const auto& r : Json::parse(take(out))) {
        std::cout << (r["passed"].get<bool>() ? "PASS " : "FAIL ") << r["check"].get<std::string>() << "\n";
    }
    return passed ? kExitOk : kExitSelfTest;
}

int exit_code_for(rd_status s)
{
    return s == RD_ERR_CONFIG ? kExitConfig : kExitRuntime;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Generative reward modelling toolkit" };
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config,-c", common.config_path, "key=value configuration file");
        if (config_required) {
            opt->required();
        }
        sub->add_option("--set", common.overrides, "override a config entry, key=value (repeatable)");
        sub->add_option("--out,-o", common.out_dir, "output directory");
        sub->add_option("--log-level", common.log_level, "debug, info, warn, error or off");
    };

    std::string data, candidates, flow_path, split = "all", mode = "top", scaling_data;
    BackendOptions backend;
    size_t k = 1, threads = 1, window = 0;
    int condition = 0;
    double tau = 0.05;
    std::vector<std::string> runs;
    std::vector<size_t> widths { 16, 64, 256 };

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic preference dataset");
    add_common(gen, true);

    auto* train = app.add_subcommand("train-rm", "train a toy reward model");
    add_common(train, true);
    train->add_option("--data", data, "preference pairs JSONL")->required();

    auto* eval = app.add_subcommand("eval-rm", "pairwise accuracy on the ID/OOD splits");
    add_common(eval, true);
    eval->add_option("--data", data, "preference pairs JSONL")->required();
    eval->add_option("--split", split, "id, ood or all")->check(CLI::IsMember({ "id", "ood", "train", "all" }));
    eval->add_option("--threads", threads, "scoring threads");
    add_backend_options(eval, backend);

    auto* tflow = app.add_subcommand("train-flow", "train the toy rectified flow and export samples");
    add_common(tflow, true);

    auto* bon = app.add_subcommand("bon-select", "Best-of-N tournament over candidates");
    add_common(bon, true);
    bon->add_option("--candidates", candidates, "candidates JSONL")->required();
    bon->add_option("--mode", mode, "top or bottom")->check(CLI::IsMember({ "top", "bottom" }));
    bon->add_option("--k", k, "number of candidates to keep");
    bon->add_option("--threads", threads, "scoring threads");
    add_backend_options(bon, backend);

    auto* refl = app.add_subcommand("refl", "reward-feedback fine-tuning of the flow");
    add_common(refl, true);
    refl->add_option("--flow", flow_path, "flow checkpoint")->required();
    add_backend_options(refl, backend);

    auto* tts = app.add_subcommand("tts-search", "search over sampling paths with a verifier");
    add_common(tts, true);
    tts->add_option("--flow", flow_path, "flow checkpoint")->required();
    tts->add_option("--condition", condition, "condition class");
    add_backend_options(tts, backend);

    auto* judge = app.add_subcommand("judge", "Good/Same/Bad judgments of chosen (A) against rejected (B)");
    add_common(judge, true);
    judge->add_option("--data", data, "pairs JSONL")->required();
    judge->add_option("--tau", tau, "same-verdict threshold on the symmetrized margin");
    add_backend_options(judge, backend);

    auto* report = app.add_subcommand("report", "SVG/CSV reports from run directories");
    add_common(report, true);
    report->add_option("--run", runs, "ReFL output directory (repeatable)");
    report->add_option("--window", window, "smoothing window (default refl.log_window)");
    report->add_option("--scaling-data", scaling_data, "pairs JSONL for a width sweep");
    report->add_option("--widths", widths, "hidden widths for the sweep")->delimiter(',');

    auto* self = app.add_subcommand("self-test", "run built-in consistency checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(common);
        if (train->parsed()) return cmd_train_rm(common, data);
        if (eval->parsed()) return cmd_eval_rm(common, data, backend, split, threads);
        if (tflow->parsed()) return cmd_train_flow(common);
        if (bon->parsed()) return cmd_bon_select(common, candidates, backend, mode, k, threads);
        if (refl->parsed()) return cmd_refl(common, flow_path, backend);
        if (tts->parsed()) return cmd_tts(common, flow_path, backend, condition);
        if (judge->parsed()) return cmd_judge(common, data, backend, tau);
        if (report->parsed()) return cmd_report(common, runs, window, scaling_data, widths);
        if (self->parsed()) return cmd_self_test();
    } catch (const Failure& f) {
        std::cerr << "error (" << rd_status_name(f.status) << "): " << f.message << "\n";
        return exit_code_for(f.status);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}
