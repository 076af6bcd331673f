// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "odorgen/molgraph.hpp"

namespace odorgen::smiles {

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& reason)
      : Error("SMILES syntax error at position " + std::to_string(position) + ": " + reason),
        position_(position),
        reason_(reason) {}

  std::size_t position() const { return position_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t position_;
  std::string reason_;
};

ODORGEN_DEFINE_ERROR(UnwritableGraph);

/// Parses the supported SMILES subset: organic-subset and aromatic atoms,
/// bracket atoms (optional H count), bonds - = # : / \, branches, ring
/// closures (digits and %nn) and '.' separated fragments. Stereo marks
/// (@, /, \) are accepted and discarded; isotopes and charges are rejected.
/// Positions are all zero and hydrogens stay implicit.
///
/// Throws SyntaxError or UnknownElement.
MoleculeGraph parse(std::string_view text);

/// Deterministic SMILES following atom index order. Aromatic bonds are
/// written with lowercase atoms when the aromatic rings are balanced and in
/// Kekule form otherwise. Throws UnwritableGraph.
std::string write(const MoleculeGraph& g);

/// SMILES that is identical for every atom ordering of the same graph.
/// Fragments are canonicalised separately, sorted and joined with '.'.
std::string canonicalize(const MoleculeGraph& g);

}  // namespace odorgen::smiles
