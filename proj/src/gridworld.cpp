#include "flexfii/gridworld.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flexfii/errors.hpp"

namespace flexfii {

namespace {

void check_spec(const GridSpec& spec) {
    if (spec.width == 0 || spec.height == 0)
        throw Error(ErrorCode::InvalidArgument, "grid dimensions must be positive");
    if (!(spec.px >= 0.0 && spec.px <= 1.0) || !(spec.py >= 0.0 && spec.py <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "px and py must lie in [0,1]");
    if (!(spec.alpha > 0.0 && spec.alpha <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0,1]");
    if (!std::isfinite(spec.default_payoff))
        throw Error(ErrorCode::InvalidArgument, "default payoff must be finite");
    for (const auto& a : spec.anchors) {
        if (a.x >= spec.width || a.y >= spec.height)
            throw Error(ErrorCode::AnchorOutOfGrid, "anchor (" + std::to_string(a.x) + "," + std::to_string(a.y) +
                                                        ") outside " + std::to_string(spec.width) + "x" +
                                                        std::to_string(spec.height));
        if (!std::isfinite(a.payoff))
            throw Error(ErrorCode::InvalidArgument, "anchor payoff must be finite");
    }
}

// Adds the two moves of one axis. `forward` is the weight of +1.
void axis_moves(std::vector<SparseMatrix::Triplet>& out, StateIndex self, std::size_t pos, std::size_t len,
                std::size_t stride, double forward, double backward, GridBoundary boundary) {
    if (len == 1) {
        out.push_back({self, self, forward + backward});
        return;
    }
    const StateIndex up = self + stride;
    const StateIndex down = self - stride;
    if (pos + 1 < len)
        out.push_back({self, up, forward});
    else
        out.push_back({self, boundary == GridBoundary::Stay ? self : down, forward});
    if (pos > 0)
        out.push_back({self, down, backward});
    else
        out.push_back({self, boundary == GridBoundary::Stay ? self : up, backward});
}

} // namespace

Model build_grid(const GridSpec& spec) {
    check_spec(spec);
    const std::size_t n = spec.width * spec.height;
    std::vector<SparseMatrix::Triplet> entries;
    entries.reserve(4 * n);
    for (std::size_t y = 0; y < spec.height; ++y) {
        for (std::size_t x = 0; x < spec.width; ++x) {
            const auto s = grid_index(spec, x, y);
            axis_moves(entries, s, x, spec.width, 1, 0.5 * spec.px, 0.5 * (1.0 - spec.px),
                       spec.boundary);
            axis_moves(entries, s, y, spec.height, spec.width, 0.5 * spec.py, 0.5 * (1.0 - spec.py),
                       spec.boundary);
        }
    }
    ValueVector payoff(n, spec.default_payoff);
    for (const auto& a : spec.anchors)
        payoff[grid_index(spec, a.x, a.y)] = a.payoff;
    Model model(SparseMatrix(n, n, std::move(entries)), ValueVector(n, spec.alpha), std::move(payoff));
    model.set_grid({spec.width, spec.height});
    validate(model);
    return model;
}

GridSpec scale_grid(const GridSpec& spec, std::size_t factor) {
    if (factor == 0)
        throw Error(ErrorCode::InvalidArgument, "scale factor must be >= 1");
    GridSpec out = spec;
    out.width = (spec.width - 1) * factor + 1;
    out.height = (spec.height - 1) * factor + 1;
    for (auto& a : out.anchors) {
        a.x *= factor;
        a.y *= factor;
    }
    return out;
}

GridSpec parse_grid_spec_json(const std::string& text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, e.what());
    }
    GridSpec spec;
    try {
        spec.width = doc.at("width").get<std::size_t>();
        spec.height = doc.at("height").get<std::size_t>();
        spec.px = doc.value("px", 0.5);
        spec.py = doc.value("py", 0.5);
        spec.alpha = doc.at("alpha").get<double>();
        spec.default_payoff = doc.value("default_payoff", 0.0);
        const auto boundary = doc.value("boundary", std::string("bounce"));
        if (boundary == "stay")
            spec.boundary = GridBoundary::Stay;
        else if (boundary != "bounce")
            throw Error(ErrorCode::Parse, "boundary must be \"bounce\" or \"stay\"");
        for (const auto& a : doc.value("anchors", json::array())) {
            if (!a.is_array() || a.size() != 3)
                throw Error(ErrorCode::Parse, "anchors must be [x,y,payoff] triples");
            spec.anchors.push_back({a[0].get<std::size_t>(), a[1].get<std::size_t>(), a[2].get<double>()});
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("grid spec: ") + e.what());
    }
    check_spec(spec);
    return spec;
}

GridSpec load_grid_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Parse, "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_grid_spec_json(buf.str());
}

std::string grid_spec_to_json(const GridSpec& spec) {
    nlohmann::ordered_json doc;
    doc["width"] = spec.width;
    doc["height"] = spec.height;
    doc["px"] = spec.px;
    doc["py"] = spec.py;
    doc["alpha"] = spec.alpha;
    doc["default_payoff"] = spec.default_payoff;
    auto anchors = nlohmann::ordered_json::array();
    for (const auto& a : spec.anchors)
        anchors.push_back({a.x, a.y, a.payoff});
    doc["anchors"] = std::move(anchors);
    doc["boundary"] = spec.boundary == GridBoundary::Stay ? "stay" : "bounce";
    return doc.dump() + "\n";
}

GridSpec toy_grid_spec() {
    GridSpec spec;
    spec.width = 21;
    spec.height = 21;
    spec.alpha = std::pow(0.98, 1.0 / 20.0);
    spec.default_payoff = 5.0;
    spec.anchors = {{5, 5, 10.0}, {5, 15, 0.0}, {15, 15, 0.0}};
    return spec;
}

GridSpec large_grid_spec() {
    GridSpec spec = scale_grid(toy_grid_spec(), 10);
    spec.alpha = 0.9999;
    return spec;
}

} // namespace flexfii
