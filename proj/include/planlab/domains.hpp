// domains.hpp
//
// Programmatic constructors for the benchmark domains: the two Heavy Grippers
// variants, the two Colors variants, both Lights Out formulations, the
// FlipFlop instance, and the GF(2) view of Lights Out.

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "planlab/strips.hpp"

namespace planlab::domains {

enum class GrippersVariant { WellFormed, DeleteFree };
enum class ColorsVariant { WellFormed, Strips };

Domain heavy_grippers(GrippersVariant variant);
// The original formulation where picking a heavy ball discharges the battery
// through a conditional effect. Used for simulation-level tests only.
Domain heavy_grippers_conditional();

Domain colors(ColorsVariant variant);

// Square grid of lights with 4-neighborhood adjacency. Cell indices are
// row-major; closed neighborhoods contain the cell itself.
struct Board {
  int rows = 0;
  int cols = 0;

  Board(int r, int c);
  int cells() const { return rows * cols; }
  int cell(int r, int c) const { return r * cols + c; }
  std::string light_name(int cell) const;
  std::vector<int> closed_neighborhood(int cell) const;
};

// Domain plus the fixed parts of every instance; the initial state varies.
struct LightsOutTemplate {
  Board board;
  std::shared_ptr<const Domain> domain;
  std::vector<std::string> objects;
  std::vector<GroundLiteral> goal;  // all lights off
  bool well_formed = false;
};

// One nullary press schema per cell; each neighbor contributes a pair of
// conditional effects toggling it. Goal: every light off (negative literals).
LightsOutTemplate lights_out_conditional(const Board& board);

// One nullary schema per cell and per on/off configuration of its closed
// neighborhood, with full positive and negative preconditions and effects.
// Goal: out(l) for every light.
LightsOutTemplate lights_out_well_formed(const Board& board);

// Instance of a Lights Out template with the given cells lit.
Instance lights_out_instance(const LightsOutTemplate& tmpl,
                             const std::vector<int>& lit_cells);

// Cell pressed by a schema of either variant, or -1.
int pressed_cell(const LightsOutTemplate& tmpl, SchemaId schema);

// For the well-formed variant: the unique schema that presses `cell` and is
// applicable in `state`. Throws Error if none matches.
SchemaId well_formed_press_schema(const LightsOutTemplate& tmpl,
                                  const State& state, int cell);

// Single-object instance whose valid plans spell out exactly the strings
// with a `b` after which only `e` occurs.
Instance flipflop_instance();

// GF(2) view: bit k of a vector is light k. Effect vectors are the closed
// neighborhoods.
using F2Vector = std::uint64_t;

std::vector<F2Vector> effect_matrix(const Board& board);
F2Vector state_vector(const Board& board, const State& state,
                      const Instance& instance);
F2Vector ghom(const Board& board, const std::vector<int>& pressed_cells);
bool parity_verdict(const Board& board, F2Vector init,
                    const std::vector<int>& pressed_cells);

}  // namespace planlab::domains
