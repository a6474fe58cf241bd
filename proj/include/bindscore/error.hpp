// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bindscore {

/// Cosine of a zero-norm vector, or another input with no defined value.
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed bundle, manifest, pairs file or dataset manifest.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (attribute, object) key needed by refinement.
struct PhraseKey {
  std::string attribute;
  std::string object;

  friend bool operator==(const PhraseKey&, const PhraseKey&) = default;
  friend auto operator<=>(const PhraseKey&, const PhraseKey&) = default;
};

/// One or more phrase-table entries are absent. `keys()` is sorted and unique.
class MissingPhraseError : public std::runtime_error {
 public:
  explicit MissingPhraseError(std::vector<PhraseKey> keys);

  const std::vector<PhraseKey>& keys() const noexcept { return keys_; }

 private:
  std::vector<PhraseKey> keys_;
};

}  // namespace bindscore
