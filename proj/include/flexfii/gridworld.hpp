#pragma once

// Two-dimensional random walks with reflecting (bounce-back) boundaries.
// Cell (x, y) has state index y * width + x.

#include <string>
#include <vector>

#include "flexfii/chain_model.hpp"

namespace flexfii {

struct GridAnchor {
    std::size_t x = 0;
    std::size_t y = 0;
    double payoff = 0.0;
};

enum class GridBoundary {
    Bounce, ///< a blocked move goes the opposite way on the same axis
    Stay,   ///< a blocked move leaves the walker in place
};

struct GridSpec {
    std::size_t width = 1;
    std::size_t height = 1;
    double px = 0.5; ///< right-move weight on the x axis
    double py = 0.5; ///< up-move weight on the y axis
    double alpha = 1.0;
    double default_payoff = 0.0;
    std::vector<GridAnchor> anchors;
    GridBoundary boundary = GridBoundary::Bounce;
};

/// Moves: right 0.5 px, left 0.5 (1 - px), up 0.5 py, down 0.5 (1 - py).
/// With Bounce, a move that would leave the grid goes the opposite way on
/// the same axis (on an axis of length 1 it stays put).
Model build_grid(const GridSpec& spec);

/// Multiplies width - 1, height - 1 and the anchor coordinates by `factor`.
/// Payoffs and alpha are left alone.
GridSpec scale_grid(const GridSpec& spec, std::size_t factor);

inline StateIndex grid_index(const GridSpec& spec, std::size_t x, std::size_t y) {
    return y * spec.width + x;
}

/// {"width":21,"height":21,"px":0.5,"py":0.5,"alpha":...,"default_payoff":5,
///  "anchors":[[5,5,10],[5,15,0],[15,15,0]]}; px, py default to 0.5,
/// optional "boundary": "bounce" (default) | "stay".
GridSpec parse_grid_spec_json(const std::string& text);
GridSpec load_grid_spec_file(const std::string& path);
std::string grid_spec_to_json(const GridSpec& spec);

/// The 21x21 toy landscape: 10 at (5,5), 0 at (5,15) and (15,15), 5 elsewhere,
/// alpha = 0.98^(1/20).
GridSpec toy_grid_spec();
/// The 201x201 landscape: toy anchors scaled by 10, alpha = 0.9999.
GridSpec large_grid_spec();

} // namespace flexfii
