// SPDX-License-Identifier: Apache-2.0

#include "odorgen/elements.hpp"

#include <array>

namespace odorgen {
namespace {

constexpr std::array<std::string_view, kMaxAtomicNumber + 1> kSymbols = {
    "",   "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na",
    "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",
    "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br",
    "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag",
    "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu",
    "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi",
    "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am",
    "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh",
    "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

}  // namespace

std::string_view element_symbol(int atomic_number) {
  if (atomic_number < 1 || atomic_number > kMaxAtomicNumber) return {};
  return kSymbols[static_cast<std::size_t>(atomic_number)];
}

std::optional<int> atomic_number_of(std::string_view symbol) {
  for (int z = 1; z <= kMaxAtomicNumber; ++z) {
    if (kSymbols[static_cast<std::size_t>(z)] == symbol) return z;
  }
  return std::nullopt;
}

std::optional<int> valence_electrons(int z) {
  if (z == 1) return 1;
  if (z == 2) return 2;
  // Periods 2 and 3.
  if (z >= 3 && z <= 10) return z - 2;
  if (z >= 11 && z <= 18) return z - 10;
  // Main-group p-block of periods 4 and 5 (Ga..Kr, In..Xe) and s-block.
  if (z == 19 || z == 37 || z == 55 || z == 87) return 1;
  if (z == 20 || z == 38 || z == 56 || z == 88) return 2;
  if (z >= 31 && z <= 36) return z - 28;
  if (z >= 49 && z <= 54) return z - 46;
  if (z >= 81 && z <= 86) return z - 78;
  return std::nullopt;
}

}  // namespace odorgen
