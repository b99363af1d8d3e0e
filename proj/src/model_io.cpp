#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flexfii/chain_model.hpp"
#include "flexfii/errors.hpp"

namespace flexfii {

using nlohmann::json;

namespace {

std::size_t as_index(const json& j, const char* what) {
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw Error(ErrorCode::Parse, std::string(what) + " must be a non-negative integer");
    return j.get<std::size_t>();
}

double as_number(const json& j, const char* what) {
    if (!j.is_number())
        throw Error(ErrorCode::Parse, std::string(what) + " must be a number");
    return j.get<double>();
}

} // namespace

ModelDocument parse_model_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, e.what());
    }
    if (!doc.is_object())
        throw Error(ErrorCode::Parse, "model document must be a JSON object");
    for (const char* key : {"states", "transitions", "alpha", "payoff"})
        if (!doc.contains(key))
            throw Error(ErrorCode::Parse, std::string("missing key \"") + key + "\"");

    std::size_t n = 0;
    std::vector<std::string> labels;
    const auto& states = doc["states"];
    if (states.is_array()) {
        for (const auto& l : states) {
            if (!l.is_string())
                throw Error(ErrorCode::Parse, "state labels must be strings");
            labels.push_back(l.get<std::string>());
        }
        n = labels.size();
    } else {
        n = as_index(states, "states");
    }
    if (n == 0)
        throw Error(ErrorCode::Parse, "model must have at least one state");

    std::vector<SparseMatrix::Triplet> entries;
    const auto& transitions = doc["transitions"];
    if (!transitions.is_array())
        throw Error(ErrorCode::Parse, "transitions must be an array of [from,to,prob]");
    entries.reserve(transitions.size());
    for (const auto& t : transitions) {
        if (!t.is_array() || t.size() != 3)
            throw Error(ErrorCode::Parse, "each transition must be [from,to,prob]");
        const auto from = as_index(t[0], "transition source");
        const auto to = as_index(t[1], "transition target");
        if (from >= n || to >= n)
            throw Error(ErrorCode::Parse, "transition [" + std::to_string(from) + "," + std::to_string(to) +
                                              "] references a state outside 0.." + std::to_string(n - 1));
        entries.push_back({from, to, as_number(t[2], "transition probability")});
    }

    ValueVector alpha;
    const auto& a = doc["alpha"];
    if (a.is_array()) {
        for (const auto& x : a)
            alpha.push_back(as_number(x, "alpha entry"));
        if (alpha.size() != n)
            throw Error(ErrorCode::Parse, "alpha has " + std::to_string(alpha.size()) + " entries, expected " +
                                              std::to_string(n));
    } else {
        alpha.assign(n, as_number(a, "alpha"));
    }

    ValueVector payoff;
    const auto& g = doc["payoff"];
    if (!g.is_array())
        throw Error(ErrorCode::Parse, "payoff must be an array");
    for (const auto& x : g)
        payoff.push_back(as_number(x, "payoff entry"));
    if (payoff.size() != n)
        throw Error(ErrorCode::Parse,
                    "payoff has " + std::to_string(payoff.size()) + " entries, expected " + std::to_string(n));

    ModelDocument out{Model(SparseMatrix(n, n, std::move(entries)), std::move(alpha), std::move(payoff),
                            std::move(labels)),
                      std::nullopt};

    if (doc.contains("grid")) {
        const auto& grid = doc["grid"];
        if (!grid.is_object() || !grid.contains("width") || !grid.contains("height"))
            throw Error(ErrorCode::Parse, "grid must be {\"width\":w,\"height\":h}");
        GridShape shape{as_index(grid["width"], "grid width"), as_index(grid["height"], "grid height")};
        if (shape.width * shape.height != n)
            throw Error(ErrorCode::Parse, "grid shape does not match the state count");
        out.model.set_grid(shape);
    }

    if (doc.contains("initial_set")) {
        const auto& init = doc["initial_set"];
        if (!init.is_array())
            throw Error(ErrorCode::Parse, "initial_set must be an array of state indices");
        std::vector<StateIndex> members;
        for (const auto& s : init) {
            auto idx = as_index(s, "initial_set entry");
            if (idx >= n)
                throw Error(ErrorCode::Parse, "initial_set entry " + std::to_string(idx) + " out of range");
            members.push_back(idx);
        }
        out.initial_set = StateSet::from_indices(n, members);
    }

    validate(out.model);
    return out;
}

ModelDocument load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Parse, "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_model_json(buf.str());
}

std::string model_to_json(const Model& model, const std::optional<StateSet>& initial_set) {
    // ordered_json keeps the documented key order.
    nlohmann::ordered_json doc;
    if (model.labels().empty())
        doc["states"] = model.n_states();
    else
        doc["states"] = model.labels();

    auto transitions = nlohmann::ordered_json::array();
    const auto& pi = model.transitions();
    for (std::size_t z = 0; z < pi.rows(); ++z) {
        auto cols = pi.row_columns(z);
        auto vals = pi.row_values(z);
        for (std::size_t k = 0; k < cols.size(); ++k)
            transitions.push_back({z, cols[k], vals[k]});
    }
    doc["transitions"] = std::move(transitions);

    const auto alpha = model.alpha();
    const bool constant_alpha = std::all_of(alpha.begin(), alpha.end(), [&](double x) { return x == alpha[0]; });
    if (constant_alpha && !alpha.empty())
        doc["alpha"] = alpha[0];
    else
        doc["alpha"] = std::vector<double>(alpha.begin(), alpha.end());
    doc["payoff"] = std::vector<double>(model.payoff().begin(), model.payoff().end());
    if (initial_set)
        doc["initial_set"] = initial_set->members();
    if (model.grid())
        doc["grid"] = {{"width", model.grid()->width}, {"height", model.grid()->height}};
    return doc.dump() + "\n";
}

} // namespace flexfii
