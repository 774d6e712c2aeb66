#include "flowrl/config.hpp"

#include <algorithm>
#include <filesystem>
#include <initializer_list>

#include <json.hpp>

#include "flowrl/textio.hpp"

namespace flowrl {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    std::string bad;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return it.key() == k; });
        if (!known) {
            if (!bad.empty()) bad += ", ";
            bad += "'" + it.key() + "'";
        }
    }
    if (!bad.empty()) throw ConfigError(where + ": unknown key(s) " + bad);
}

double get_double(const json& obj, const char* key, double def, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) return def;
    if (!it->is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return it->get<double>();
}

int get_int(const json& obj, const char* key, int def, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) return def;
    if (!it->is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return it->get<int>();
}

bool get_bool(const json& obj, const char* key, bool def, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) return def;
    if (!it->is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
    return it->get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& def,
                       const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) return def;
    if (!it->is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return it->get<std::string>();
}

Vec get_vec(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw ConfigError(where + ": expected an array of numbers");
    Vec v;
    v.reserve(arr.size());
    for (const auto& item : arr) {
        if (!item.is_number()) throw ConfigError(where + ": expected numbers");
        v.push_back(item.get<double>());
    }
    return v;
}

Mat get_mat(const json& rows, const std::string& where) {
    if (!rows.is_array() || rows.empty()) throw ConfigError(where + ": expected an array of rows");
    const int n = static_cast<int>(rows.size());
    Mat m(n);
    for (int i = 0; i < n; ++i) {
        const Vec row = get_vec(rows[i], where);
        if (static_cast<int>(row.size()) != n) throw ConfigError(where + ": must be square");
        for (int j = 0; j < n; ++j) m(i, j) = row[j];
    }
    return m;
}

RingTask parse_ring(const json& j, const std::string& where) {
    check_keys(j, where, {"type", "num_modes", "radius", "mode_std", "arcs"});
    RingTask ring;
    ring.num_modes = get_int(j, "num_modes", ring.num_modes, where);
    ring.radius = get_double(j, "radius", ring.radius, where);
    ring.mode_std = get_double(j, "mode_std", ring.mode_std, where);
    const auto it = j.find("arcs");
    if (it == j.end()) throw ConfigError(where + ": missing 'arcs'");
    if (!it->is_array() || it->empty()) throw ConfigError(where + ".arcs: expected a non-empty array");
    for (std::size_t k = 0; k < it->size(); ++k) {
        const std::string arc_where = where + ".arcs[" + std::to_string(k) + "]";
        const json& a = (*it)[k];
        check_keys(a, arc_where, {"start", "width"});
        Arc arc;
        arc.start = get_double(a, "start", 0.0, arc_where);
        arc.width = get_double(a, "width", 0.0, arc_where);
        ring.arcs.push_back(arc);
    }
    validate_task(ring);
    return ring;
}

Task parse_task(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const std::string type = get_string(j, "type", "", where);
    if (type == "gaussian") {
        check_keys(j, where, {"type", "conditions"});
        const auto it = j.find("conditions");
        if (it == j.end()) throw ConfigError(where + ": missing 'conditions'");
        if (!it->is_array() || it->empty()) {
            throw ConfigError(where + ".conditions: expected a non-empty array");
        }
        GaussianTask task;
        for (std::size_t k = 0; k < it->size(); ++k) {
            const std::string cond_where = where + ".conditions[" + std::to_string(k) + "]";
            const json& c = (*it)[k];
            check_keys(c, cond_where, {"mean", "cov"});
            GaussianTask::Condition cond;
            if (!c.contains("mean")) throw ConfigError(cond_where + ": missing 'mean'");
            cond.mean = get_vec(c["mean"], cond_where + ".mean");
            if (!c.contains("cov")) throw ConfigError(cond_where + ": missing 'cov'");
            cond.cov = get_mat(c["cov"], cond_where + ".cov");
            task.conditions.push_back(std::move(cond));
        }
        validate_task(task);
        return task;
    }
    if (type == "ring") return parse_ring(j, where);
    throw ConfigError(where + ".type: expected 'gaussian' or 'ring', got '" + type + "'");
}

NetSpec parse_net(const json& j) {
    check_keys(j, "net",
               {"input_dim", "hidden_widths", "time_embed_dim", "num_conditions",
                "cond_embed_dim", "activation"});
    NetSpec spec;
    spec.input_dim = get_int(j, "input_dim", spec.input_dim, "net");
    if (j.contains("hidden_widths")) {
        const json& hw = j["hidden_widths"];
        if (!hw.is_array() || hw.empty()) {
            throw ConfigError("net.hidden_widths: expected a non-empty array of integers");
        }
        spec.hidden_widths.clear();
        for (const auto& w : hw) {
            if (!w.is_number_integer()) throw ConfigError("net.hidden_widths: expected integers");
            spec.hidden_widths.push_back(w.get<int>());
        }
    }
    spec.time_embed_dim = get_int(j, "time_embed_dim", spec.time_embed_dim, "net");
    spec.num_conditions = get_int(j, "num_conditions", spec.num_conditions, "net");
    spec.cond_embed_dim = get_int(j, "cond_embed_dim", spec.cond_embed_dim, "net");
    spec.activation = activation_from_string(get_string(
        j, "activation", activation_to_string(spec.activation), "net"));
    validate_spec(spec);
    return spec;
}

RewardSpec parse_reward(const json& j) {
    check_keys(j, "reward", {"type", "steepness", "region"});
    RewardSpec spec;
    spec.type = get_string(j, "type", spec.type, "reward");
    if (spec.type != "qa_region" && spec.type != "similarity") {
        throw ConfigError("reward.type: expected 'qa_region' or 'similarity', got '" + spec.type +
                          "'");
    }
    spec.steepness = get_double(j, "steepness", spec.steepness, "reward");
    if (!(spec.steepness > 0.0)) throw ConfigError("reward.steepness must be > 0");
    if (j.contains("region")) {
        spec.region = parse_ring(j["region"], "reward.region");
    }
    return spec;
}

json ring_to_json(const RingTask& ring) {
    json arcs = json::array();
    for (const Arc& a : ring.arcs) arcs.push_back({{"start", a.start}, {"width", a.width}});
    return {{"type", "ring"},
            {"num_modes", ring.num_modes},
            {"radius", ring.radius},
            {"mode_std", ring.mode_std},
            {"arcs", arcs}};
}

json task_to_json(const Task& task) {
    if (const auto* g = std::get_if<GaussianTask>(&task)) {
        json conds = json::array();
        for (const auto& c : g->conditions) {
            json cov = json::array();
            for (int i = 0; i < c.cov.n; ++i) {
                json row = json::array();
                for (int j = 0; j < c.cov.n; ++j) row.push_back(c.cov(i, j));
                cov.push_back(row);
            }
            conds.push_back({{"mean", c.mean}, {"cov", cov}});
        }
        return {{"type", "gaussian"}, {"conditions", conds}};
    }
    return ring_to_json(std::get<RingTask>(task));
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::string& origin) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": invalid JSON: " + e.what());
    }
    check_keys(j, origin,
               {"stage", "seed", "out_dir", "deterministic", "task", "net", "reward", "pretrain",
                "grpo", "dpo", "sft", "sample", "eval", "calibrate", "sweep"});

    ExperimentConfig cfg;
    if (j.contains("stage")) {
        const std::string stage = get_string(j, "stage", "", origin);
        static const char* kStages[] = {"pretrain", "grpo", "dpo", "sft",
                                        "sample", "eval", "calibrate", "sweep"};
        if (std::find_if(std::begin(kStages), std::end(kStages), [&](const char* s) {
                return stage == s;
            }) == std::end(kStages)) {
            throw ConfigError(origin + ".stage: unknown stage '" + stage + "'");
        }
        cfg.stage = stage;
    }
    if (j.contains("seed")) {
        const json& s = j["seed"];
        if (!s.is_number_integer() || (s.is_number_integer() && s.get<long long>() < 0)) {
            throw ConfigError(origin + ".seed: expected a non-negative integer");
        }
        cfg.seed = s.get<std::uint64_t>();
    }
    cfg.out_dir = get_string(j, "out_dir", cfg.out_dir, origin);
    cfg.deterministic = get_bool(j, "deterministic", cfg.deterministic, origin);
    if (j.contains("task")) cfg.task = parse_task(j["task"], "task");
    if (j.contains("net")) cfg.net = parse_net(j["net"]);
    if (j.contains("reward")) cfg.reward = parse_reward(j["reward"]);

    if (j.contains("pretrain")) {
        const json& s = j["pretrain"];
        check_keys(s, "pretrain", {"steps", "batch_size", "lr", "log_every"});
        cfg.pretrain.steps = get_int(s, "steps", cfg.pretrain.steps, "pretrain");
        cfg.pretrain.batch_size = get_int(s, "batch_size", cfg.pretrain.batch_size, "pretrain");
        cfg.pretrain.lr = get_double(s, "lr", cfg.pretrain.lr, "pretrain");
        cfg.pretrain.log_every = get_int(s, "log_every", cfg.pretrain.log_every, "pretrain");
    }
    if (j.contains("grpo")) {
        const json& s = j["grpo"];
        check_keys(s, "grpo",
                   {"checkpoint", "group_size", "noise_level", "kl_coeff", "clip_eps", "steps",
                    "prompts_per_step", "inner_updates", "num_steps", "clamp_delta", "lr"});
        cfg.grpo.checkpoint = get_string(s, "checkpoint", cfg.grpo.checkpoint, "grpo");
        cfg.grpo.group_size = get_int(s, "group_size", cfg.grpo.group_size, "grpo");
        cfg.grpo.noise_level = get_double(s, "noise_level", cfg.grpo.noise_level, "grpo");
        cfg.grpo.kl_coeff = get_double(s, "kl_coeff", cfg.grpo.kl_coeff, "grpo");
        cfg.grpo.clip_eps = get_double(s, "clip_eps", cfg.grpo.clip_eps, "grpo");
        cfg.grpo.steps = get_int(s, "steps", cfg.grpo.steps, "grpo");
        cfg.grpo.prompts_per_step =
            get_int(s, "prompts_per_step", cfg.grpo.prompts_per_step, "grpo");
        cfg.grpo.inner_updates = get_int(s, "inner_updates", cfg.grpo.inner_updates, "grpo");
        cfg.grpo.num_steps = get_int(s, "num_steps", cfg.grpo.num_steps, "grpo");
        cfg.grpo.clamp_delta = get_double(s, "clamp_delta", cfg.grpo.clamp_delta, "grpo");
        cfg.grpo.lr = get_double(s, "lr", cfg.grpo.lr, "grpo");
    }
    if (j.contains("dpo")) {
        const json& s = j["dpo"];
        check_keys(s, "dpo",
                   {"checkpoint", "beta", "num_prompts", "candidates_per_prompt", "steps",
                    "batch_size", "lr", "num_steps", "clamp_delta"});
        cfg.dpo.checkpoint = get_string(s, "checkpoint", cfg.dpo.checkpoint, "dpo");
        cfg.dpo.beta = get_double(s, "beta", cfg.dpo.beta, "dpo");
        cfg.dpo.num_prompts = get_int(s, "num_prompts", cfg.dpo.num_prompts, "dpo");
        cfg.dpo.candidates_per_prompt =
            get_int(s, "candidates_per_prompt", cfg.dpo.candidates_per_prompt, "dpo");
        cfg.dpo.steps = get_int(s, "steps", cfg.dpo.steps, "dpo");
        cfg.dpo.batch_size = get_int(s, "batch_size", cfg.dpo.batch_size, "dpo");
        cfg.dpo.lr = get_double(s, "lr", cfg.dpo.lr, "dpo");
        cfg.dpo.num_steps = get_int(s, "num_steps", cfg.dpo.num_steps, "dpo");
        cfg.dpo.clamp_delta = get_double(s, "clamp_delta", cfg.dpo.clamp_delta, "dpo");
    }
    if (j.contains("sft")) {
        const json& s = j["sft"];
        check_keys(s, "sft",
                   {"checkpoint", "source", "num_samples", "top_fraction", "noise_level",
                    "num_steps", "clamp_delta", "steps", "batch_size", "lr"});
        cfg.sft.checkpoint = get_string(s, "checkpoint", cfg.sft.checkpoint, "sft");
        cfg.sft.source = get_string(s, "source", cfg.sft.source, "sft");
        if (cfg.sft.source != "task" && cfg.sft.source != "top_rollouts") {
            throw ConfigError("sft.source: expected 'task' or 'top_rollouts'");
        }
        cfg.sft.num_samples = get_int(s, "num_samples", cfg.sft.num_samples, "sft");
        cfg.sft.top_fraction = get_double(s, "top_fraction", cfg.sft.top_fraction, "sft");
        if (!(cfg.sft.top_fraction > 0.0 && cfg.sft.top_fraction <= 1.0)) {
            throw ConfigError("sft.top_fraction must lie in (0, 1]");
        }
        cfg.sft.noise_level = get_double(s, "noise_level", cfg.sft.noise_level, "sft");
        cfg.sft.num_steps = get_int(s, "num_steps", cfg.sft.num_steps, "sft");
        cfg.sft.clamp_delta = get_double(s, "clamp_delta", cfg.sft.clamp_delta, "sft");
        cfg.sft.steps = get_int(s, "steps", cfg.sft.steps, "sft");
        cfg.sft.batch_size = get_int(s, "batch_size", cfg.sft.batch_size, "sft");
        cfg.sft.lr = get_double(s, "lr", cfg.sft.lr, "sft");
    }
    if (j.contains("sample")) {
        const json& s = j["sample"];
        check_keys(s, "sample",
                   {"checkpoint", "num_samples", "sampler", "noise_level", "num_steps",
                    "clamp_delta", "dump_trajectories"});
        cfg.sample.checkpoint = get_string(s, "checkpoint", cfg.sample.checkpoint, "sample");
        cfg.sample.num_samples = get_int(s, "num_samples", cfg.sample.num_samples, "sample");
        cfg.sample.sampler = get_string(s, "sampler", cfg.sample.sampler, "sample");
        if (cfg.sample.sampler != "ode" && cfg.sample.sampler != "sde") {
            throw ConfigError("sample.sampler: expected 'ode' or 'sde'");
        }
        cfg.sample.noise_level = get_double(s, "noise_level", cfg.sample.noise_level, "sample");
        cfg.sample.num_steps = get_int(s, "num_steps", cfg.sample.num_steps, "sample");
        cfg.sample.clamp_delta = get_double(s, "clamp_delta", cfg.sample.clamp_delta, "sample");
        cfg.sample.dump_trajectories =
            get_int(s, "dump_trajectories", cfg.sample.dump_trajectories, "sample");
    }
    if (j.contains("eval")) {
        const json& s = j["eval"];
        check_keys(s, "eval", {"checkpoint", "num_samples", "num_steps", "clamp_delta"});
        cfg.eval.checkpoint = get_string(s, "checkpoint", cfg.eval.checkpoint, "eval");
        cfg.eval.num_samples = get_int(s, "num_samples", cfg.eval.num_samples, "eval");
        cfg.eval.num_steps = get_int(s, "num_steps", cfg.eval.num_steps, "eval");
        cfg.eval.clamp_delta = get_double(s, "clamp_delta", cfg.eval.clamp_delta, "eval");
    }
    if (j.contains("calibrate")) {
        const json& s = j["calibrate"];
        check_keys(s, "calibrate", {"input"});
        cfg.calibrate_section.input = get_string(s, "input", "", "calibrate");
    }
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        check_keys(s, "sweep", {"axis", "values"});
        cfg.sweep.axis = get_string(s, "axis", "", "sweep");
        if (cfg.sweep.axis != "noise_level" && cfg.sweep.axis != "group_size") {
            throw ConfigError("sweep.axis: expected 'noise_level' or 'group_size'");
        }
        if (!s.contains("values")) throw ConfigError("sweep: missing 'values'");
        cfg.sweep.values = get_vec(s["values"], "sweep.values");
        if (cfg.sweep.values.empty()) throw ConfigError("sweep.values: must be non-empty");
        if (cfg.sweep.axis == "group_size") {
            for (double v : cfg.sweep.values) {
                if (v != static_cast<double>(static_cast<int>(v)) || v < 2.0) {
                    throw ConfigError("sweep.values: group sizes must be integers >= 2");
                }
            }
        } else {
            for (double v : cfg.sweep.values) {
                if (v < 0.0) throw ConfigError("sweep.values: noise levels must be >= 0");
            }
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    ExperimentConfig cfg = parse_config(read_text_file(path), path);
    cfg.config_dir = std::filesystem::path(path).parent_path().string();
    return cfg;
}

std::string dump_config(const ExperimentConfig& cfg) {
    json j;
    j["stage"] = cfg.stage ? json(*cfg.stage) : json(nullptr);
    j["seed"] = cfg.seed;
    j["deterministic"] = cfg.deterministic;
    if (cfg.task) j["task"] = task_to_json(*cfg.task);
    if (cfg.net) {
        j["net"] = {{"input_dim", cfg.net->input_dim},
                    {"hidden_widths", cfg.net->hidden_widths},
                    {"time_embed_dim", cfg.net->time_embed_dim},
                    {"num_conditions", cfg.net->num_conditions},
                    {"cond_embed_dim", cfg.net->cond_embed_dim},
                    {"activation", activation_to_string(cfg.net->activation)}};
    }
    if (cfg.reward) {
        j["reward"] = {{"type", cfg.reward->type}, {"steepness", cfg.reward->steepness}};
        if (cfg.reward->region) j["reward"]["region"] = ring_to_json(*cfg.reward->region);
    }
    j["pretrain"] = {{"steps", cfg.pretrain.steps},
                     {"batch_size", cfg.pretrain.batch_size},
                     {"lr", cfg.pretrain.lr},
                     {"log_every", cfg.pretrain.log_every}};
    j["grpo"] = {{"checkpoint", cfg.grpo.checkpoint},
                 {"group_size", cfg.grpo.group_size},
                 {"noise_level", cfg.grpo.noise_level},
                 {"kl_coeff", cfg.grpo.kl_coeff},
                 {"clip_eps", cfg.grpo.clip_eps},
                 {"steps", cfg.grpo.steps},
                 {"prompts_per_step", cfg.grpo.prompts_per_step},
                 {"inner_updates", cfg.grpo.inner_updates},
                 {"num_steps", cfg.grpo.num_steps},
                 {"clamp_delta", cfg.grpo.clamp_delta},
                 {"lr", cfg.grpo.lr}};
    j["dpo"] = {{"checkpoint", cfg.dpo.checkpoint},
                {"beta", cfg.dpo.beta},
                {"num_prompts", cfg.dpo.num_prompts},
                {"candidates_per_prompt", cfg.dpo.candidates_per_prompt},
                {"steps", cfg.dpo.steps},
                {"batch_size", cfg.dpo.batch_size},
                {"lr", cfg.dpo.lr},
                {"num_steps", cfg.dpo.num_steps},
                {"clamp_delta", cfg.dpo.clamp_delta}};
    j["sft"] = {{"checkpoint", cfg.sft.checkpoint},
                {"source", cfg.sft.source},
                {"num_samples", cfg.sft.num_samples},
                {"top_fraction", cfg.sft.top_fraction},
                {"noise_level", cfg.sft.noise_level},
                {"num_steps", cfg.sft.num_steps},
                {"clamp_delta", cfg.sft.clamp_delta},
                {"steps", cfg.sft.steps},
                {"batch_size", cfg.sft.batch_size},
                {"lr", cfg.sft.lr}};
    j["sample"] = {{"checkpoint", cfg.sample.checkpoint},
                   {"num_samples", cfg.sample.num_samples},
                   {"sampler", cfg.sample.sampler},
                   {"noise_level", cfg.sample.noise_level},
                   {"num_steps", cfg.sample.num_steps},
                   {"clamp_delta", cfg.sample.clamp_delta},
                   {"dump_trajectories", cfg.sample.dump_trajectories}};
    j["eval"] = {{"checkpoint", cfg.eval.checkpoint},
                 {"num_samples", cfg.eval.num_samples},
                 {"num_steps", cfg.eval.num_steps},
                 {"clamp_delta", cfg.eval.clamp_delta}};
    j["calibrate"] = {{"input", cfg.calibrate_section.input}};
    // The sweep section only exists when configured; an empty axis would not
    // survive a re-parse.
    if (!cfg.sweep.axis.empty()) {
        j["sweep"] = {{"axis", cfg.sweep.axis}, {"values", cfg.sweep.values}};
    }
    return j.dump(1) + "\n";
}

std::uint64_t config_fingerprint(const ExperimentConfig& cfg) {
    const std::string text = dump_config(cfg);
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    for (unsigned char b : text) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

std::string resolve_path(const ExperimentConfig& cfg, const std::string& path) {
    if (path.empty()) throw ConfigError("missing a required file path in the config");
    std::filesystem::path p(path);
    if (p.is_absolute() || cfg.config_dir.empty()) return path;
    return (std::filesystem::path(cfg.config_dir) / p).string();
}

}  // namespace flowrl
