// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string_view>

namespace odorgen {

inline constexpr int kMaxAtomicNumber = 118;

/// Element symbol for an atomic number in [1, 118]; empty view otherwise.
std::string_view element_symbol(int atomic_number);

/// Atomic number for a symbol with standard capitalisation ("C", "Cl").
std::optional<int> atomic_number_of(std::string_view symbol);

/// Valence-shell electron count for main-group elements; nullopt for the
/// transition series and beyond, where the simple octet picture does not
/// apply.
std::optional<int> valence_electrons(int atomic_number);

}  // namespace odorgen
