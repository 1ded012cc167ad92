#pragma once

#include <istream>
#include <memory>
#include <ostream>
#include <string>

#include <json.hpp>

#include "bitact/hexfloat.hpp"
#include "bitact/mixture_model.hpp"
#include "bitact/ngram_model.hpp"
#include "bitact/uniform_model.hpp"

namespace bitact {

// Self-describing model files: JSON with a format/version tag, the
// alphabet, the model kind, and kind-specific parameters. Doubles are
// hexfloat strings, so save/load round-trips bit-exactly and refitting
// the same corpus reproduces identical bytes.

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json alphabet_to_json(const SymbolAlphabet& a) {
    nlohmann::json j;
    j["symbols"] = a.names();
    j["max_action_length"] = a.max_action_length();
    return j;
}

inline SymbolAlphabet alphabet_from_json(const nlohmann::json& j) {
    return SymbolAlphabet(j.at("symbols").get<std::vector<std::string>>(),
                          j.at("max_action_length").get<int>());
}

}  // namespace detail

inline nlohmann::json model_to_json(const ActionModel& model) {
    nlohmann::json j;
    j["format"] = "bitact-model";
    j["version"] = kModelFormatVersion;
    j["alphabet"] = detail::alphabet_to_json(model.alphabet());
    j["prob_floor"] = to_hexfloat(model.options().prob_floor);

    if (const auto* u = dynamic_cast<const UniformActionModel*>(&model)) {
        j["kind"] = "uniform";
        j["shared"] = u->shared();
        nlohmann::json lists = nlohmann::json::array();
        for (int i = 0; i < u->num_state_slots(); ++i) {
            nlohmann::json actions = nlohmann::json::array();
            for (const auto& a : u->slot_actions(i))
                actions.push_back(model.alphabet().format(a));
            lists.push_back(actions);
        }
        j["actions"] = lists;
        return j;
    }
    if (const auto* g = dynamic_cast<const NGramActionModel*>(&model)) {
        j["kind"] = "ngram";
        j["order"] = g->order();
        j["alpha"] = to_hexfloat(g->alpha());
        nlohmann::json counts = nlohmann::json::array();
        for (const auto& [key, row] : g->counts()) {
            SymbolString ctx;
            for (char c : key) ctx.push_back(static_cast<SymbolId>(c));
            nlohmann::json entry;
            entry["context"] = model.alphabet().format(ctx);
            entry["counts"] = row;
            counts.push_back(entry);
        }
        j["counts"] = counts;
        return j;
    }
    if (const auto* m = dynamic_cast<const MixtureActionModel*>(&model)) {
        j["kind"] = "mixture";
        nlohmann::json comps = nlohmann::json::array();
        for (size_t i = 0; i < m->num_components(); ++i)
            comps.push_back(model_to_json(m->component(i)));
        j["components"] = comps;
        nlohmann::json weights = nlohmann::json::array();
        for (double lw : m->log_weights()) weights.push_back(to_hexfloat(lw));
        j["log_weights"] = weights;
        j["history"] = m->history();
        return j;
    }
    throw PreconditionError("this model kind has no serialized form");
}

inline std::unique_ptr<ActionModel> model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "bitact-model")
        throw IngestionError("not a bitact model file");
    if (j.value("version", 0) != kModelFormatVersion)
        throw IngestionError("unsupported model file version");
    const SymbolAlphabet alphabet = detail::alphabet_from_json(j.at("alphabet"));
    ModelOptions options;
    options.prob_floor = from_hexfloat(j.at("prob_floor").get<std::string>());
    const std::string kind = j.at("kind").get<std::string>();

    if (kind == "uniform") {
        std::vector<std::vector<SymbolString>> lists;
        for (const auto& actions : j.at("actions")) {
            std::vector<SymbolString> parsed;
            for (const auto& a : actions)
                parsed.push_back(alphabet.parse(a.get<std::string>()));
            lists.push_back(std::move(parsed));
        }
        if (j.value("shared", false)) {
            if (lists.size() != 1)
                throw IngestionError("shared uniform model needs exactly one action list");
            return std::make_unique<UniformActionModel>(alphabet, lists[0], options);
        }
        return std::make_unique<UniformActionModel>(alphabet, std::move(lists), options);
    }
    if (kind == "ngram") {
        auto model = std::make_unique<NGramActionModel>(
            alphabet, j.at("order").get<int>(),
            from_hexfloat(j.at("alpha").get<std::string>()), options);
        NGramActionModel::CountTable counts;
        for (const auto& entry : j.at("counts")) {
            const SymbolString ctx = alphabet.parse(entry.at("context").get<std::string>());
            auto row = entry.at("counts").get<std::vector<std::uint64_t>>();
            if (row.size() != static_cast<size_t>(alphabet.size()))
                throw IngestionError("count row width does not match the alphabet");
            counts[NGramActionModel::encode(ctx)] = std::move(row);
        }
        model->set_counts(std::move(counts));
        return model;
    }
    if (kind == "mixture") {
        std::vector<std::shared_ptr<const ActionModel>> components;
        for (const auto& comp : j.at("components"))
            components.push_back(std::shared_ptr<const ActionModel>(model_from_json(comp)));
        auto model = std::make_unique<MixtureActionModel>(std::move(components), options);
        std::vector<double> weights;
        for (const auto& w : j.at("log_weights"))
            weights.push_back(from_hexfloat(w.get<std::string>()));
        model->restore(std::move(weights),
                       j.at("history").get<std::vector<std::string>>());
        return model;
    }
    throw IngestionError("unknown model kind: " + kind);
}

inline void save_model(std::ostream& out, const ActionModel& model) {
    out << model_to_json(model).dump(2) << '\n';
}

inline std::unique_ptr<ActionModel> load_model(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError(std::string("malformed model file: ") + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError(std::string("malformed model file: ") + e.what());
    }
}

}  // namespace bitact
