#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlbias/error.hpp"

namespace mlbias::report {

enum class Method { cda_finetune, dropout, guidebias, autodebias };

inline std::string to_string(Method m) {
    switch (m) {
    case Method::cda_finetune: return "cda_finetune";
    case Method::dropout: return "dropout";
    case Method::guidebias: return "guidebias";
    case Method::autodebias: return "autodebias";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    for (Method m : {Method::cda_finetune, Method::dropout, Method::guidebias, Method::autodebias})
        if (to_string(m) == s) return m;
    throw InputError("unknown training method \"" + std::string(s) + "\"");
}

struct ParamSpec {
    std::string name;
    std::optional<nlohmann::json> default_value;  // nullopt: caller must supply it
    std::string description;
};

/// Hyperparameter schema of each out-of-scope fine-tuning method.
inline std::vector<ParamSpec> schema(Method m) {
    using nlohmann::json;
    switch (m) {
    case Method::cda_finetune:
        return {{"epochs", json(5), "fine-tuning epochs"},
                {"batch_size", json(16), "per-step batch size"},
                {"gradient_accumulation_steps", json(16), "steps accumulated per optimizer update"},
                {"learning_rate", json(2e-5), "optimizer learning rate"},
                {"augmentation", json("two_sided"), "original plus gender-swapped sentences, shuffled"}};
    case Method::dropout:
        return {{"hidden_dropout", json(0.2), "dropout on hidden activations"},
                {"attention_dropout", json(0.15), "dropout on attention weights"},
                {"augmentation", json("none"), "same corpus as CDA, without augmentation"}};
    case Method::guidebias:
        return {{"batch_size", json(1024), "per-step batch size"},
                {"learning_rate", json(2e-5), "optimizer learning rate"},
                {"epochs", json(1), "fine-tuning epochs"}};
    case Method::autodebias:
        return {{"prompt_length", json(2), "tokens per searched bias prompt"},
                {"beam_width", json(5), "beam width of the prompt search"},
                {"divergence", json("jsd"), "bias monitored by Jensen-Shannon divergence"},
                {"learning_rate", std::nullopt, "optimizer learning rate"},
                {"epochs", std::nullopt, "fine-tuning epochs"},
                {"batch_size", std::nullopt, "per-step batch size"}};
    }
    return {};
}

struct TrainingManifest {
    Method method = Method::cda_finetune;
    nlohmann::json hyperparameters = nlohmann::json::object();
    std::map<std::string, std::string> data_paths;
};

/// Interprets "5" / "2e-5" / "true" as JSON scalars, anything else as a string.
inline nlohmann::json parse_scalar(const std::string& v) {
    try {
        auto j = nlohmann::json::parse(v);
        if (j.is_primitive()) return j;
    } catch (const nlohmann::json::exception&) {
    }
    return v;
}

/// Fills defaults, applies overrides and checks that the schema is complete.
inline TrainingManifest emit_manifest(Method method, const std::map<std::string, nlohmann::json>& params = {},
                                      std::map<std::string, std::string> data_paths = {}) {
    const auto sch = schema(method);
    TrainingManifest m;
    m.method = method;
    m.data_paths = std::move(data_paths);
    for (const auto& [k, v] : params) {
        const bool known = std::any_of(sch.begin(), sch.end(), [&](const ParamSpec& p) { return p.name == k; });
        if (!known) throw InputError("unknown hyperparameter \"" + k + "\" for " + to_string(method));
    }
    for (const auto& p : sch) {
        if (auto it = params.find(p.name); it != params.end()) {
            m.hyperparameters[p.name] = it->second;
        } else if (p.default_value) {
            m.hyperparameters[p.name] = *p.default_value;
        } else {
            throw InputError("missing required hyperparameter \"" + p.name + "\" for " + to_string(method));
        }
    }
    return m;
}

inline nlohmann::json to_json(const TrainingManifest& m) {
    return {{"method", to_string(m.method)}, {"hyperparameters", m.hyperparameters}, {"data", m.data_paths}};
}

} // namespace mlbias::report
