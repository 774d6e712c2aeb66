#include "flowrl/checkpoint.hpp"

#include <json.hpp>

#include "flowrl/textio.hpp"

namespace flowrl {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "flowrl-checkpoint-v1";

json vec_to_json(const Vec& v) {
    json arr = json::array();
    for (double x : v) arr.push_back(format_double_hex(x));
    return arr;
}

Vec vec_from_json(const json& arr, const char* what) {
    if (!arr.is_array()) throw InputError(std::string("checkpoint: ") + what + " must be an array");
    Vec v;
    v.reserve(arr.size());
    for (const auto& item : arr) {
        if (!item.is_string()) {
            throw InputError(std::string("checkpoint: ") + what + " entries must be hex strings");
        }
        v.push_back(parse_double_hex(item.get<std::string>()));
    }
    return v;
}

json spec_to_json(const NetSpec& spec) {
    return json{{"input_dim", spec.input_dim},
                {"hidden_widths", spec.hidden_widths},
                {"time_embed_dim", spec.time_embed_dim},
                {"num_conditions", spec.num_conditions},
                {"cond_embed_dim", spec.cond_embed_dim},
                {"activation", activation_to_string(spec.activation)}};
}

NetSpec spec_from_json(const json& j) {
    NetSpec spec;
    spec.input_dim = j.at("input_dim").get<int>();
    spec.hidden_widths = j.at("hidden_widths").get<std::vector<int>>();
    spec.time_embed_dim = j.at("time_embed_dim").get<int>();
    spec.num_conditions = j.at("num_conditions").get<int>();
    spec.cond_embed_dim = j.at("cond_embed_dim").get<int>();
    spec.activation = activation_from_string(j.at("activation").get<std::string>());
    validate_spec(spec);
    return spec;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    json j;
    j["format"] = kFormatTag;
    j["stage"] = ck.stage;
    j["config_fingerprint"] = ck.config_fingerprint;
    j["created"] = ck.created;
    j["spec"] = spec_to_json(ck.params.spec);
    j["params"] = vec_to_json(ck.params.values);
    if (ck.optimizer) {
        const AdamState& s = *ck.optimizer;
        j["optimizer"] = json{{"step_count", s.step_count},
                              {"lr", format_double_hex(s.lr)},
                              {"beta1", format_double_hex(s.beta1)},
                              {"beta2", format_double_hex(s.beta2)},
                              {"eps", format_double_hex(s.eps)},
                              {"first_moment", vec_to_json(s.first_moment)},
                              {"second_moment", vec_to_json(s.second_moment)}};
    } else {
        j["optimizer"] = nullptr;
    }
    write_text_file(path, j.dump(1) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    const std::string text = read_text_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError("checkpoint '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        if (!j.is_object() || j.value("format", "") != kFormatTag) {
            throw CompatibilityError("checkpoint '" + path + "': unrecognized format tag");
        }
        Checkpoint ck;
        ck.stage = j.at("stage").get<std::string>();
        ck.config_fingerprint = j.at("config_fingerprint").get<std::uint64_t>();
        ck.created = j.at("created").get<std::string>();
        ck.params.spec = spec_from_json(j.at("spec"));
        ck.params.values = vec_from_json(j.at("params"), "params");
        if (ck.params.values.size() != param_count(ck.params.spec)) {
            throw CompatibilityError("checkpoint '" + path + "': parameter count " +
                                     std::to_string(ck.params.values.size()) +
                                     " does not match " + describe(ck.params.spec));
        }
        const json& opt = j.at("optimizer");
        if (!opt.is_null()) {
            AdamState s;
            s.step_count = opt.at("step_count").get<long>();
            s.lr = parse_double_hex(opt.at("lr").get<std::string>());
            s.beta1 = parse_double_hex(opt.at("beta1").get<std::string>());
            s.beta2 = parse_double_hex(opt.at("beta2").get<std::string>());
            s.eps = parse_double_hex(opt.at("eps").get<std::string>());
            s.first_moment = vec_from_json(opt.at("first_moment"), "first_moment");
            s.second_moment = vec_from_json(opt.at("second_moment"), "second_moment");
            if (s.first_moment.size() != ck.params.values.size() ||
                s.second_moment.size() != ck.params.values.size()) {
                throw CompatibilityError("checkpoint '" + path +
                                         "': optimizer state length mismatch");
            }
            ck.optimizer = std::move(s);
        }
        return ck;
    } catch (const json::exception& e) {
        throw InputError("checkpoint '" + path + "' is malformed: " + e.what());
    }
}

Checkpoint load_checkpoint(const std::string& path, const NetSpec& expected) {
    Checkpoint ck = load_checkpoint(path);
    if (!(ck.params.spec == expected)) {
        throw CompatibilityError("checkpoint '" + path + "' has " + describe(ck.params.spec) +
                                 " but the configuration expects " + describe(expected));
    }
    return ck;
}

}  // namespace flowrl
