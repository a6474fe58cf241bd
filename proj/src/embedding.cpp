// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#include "bindscore/embedding.hpp"

#include <string>
#include <utility>

namespace bindscore {

namespace {

template <typename Derived>
void require_finite_nonzero_rows(const Eigen::MatrixBase<Derived>& m, const std::string& what) {
  if (!m.allFinite()) throw FormatError(what + ": non-finite component");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (m.row(r).squaredNorm() == 0.0) {
      throw DegenerateInput(what + ": zero-norm vector at row " + std::to_string(r));
    }
  }
}

}  // namespace

MissingPhraseError::MissingPhraseError(std::vector<PhraseKey> keys)
    : std::runtime_error([&] {
        std::string msg = "missing phrase-table entries:";
        for (const auto& k : keys) msg += " (" + k.attribute + ", " + k.object + ")";
        return msg;
      }()),
      keys_(std::move(keys)) {}

ImageEmbedding::ImageEmbedding(std::string id, Vector cls, Matrix patches,
                               std::optional<PatchGrid> grid)
    : id_(std::move(id)), cls_(std::move(cls)), patches_(std::move(patches)), grid_(grid) {
  if (cls_.size() < 1) throw DimensionMismatch("image " + id_ + ": empty cls vector");
  if (patches_.rows() < 1) throw DimensionMismatch("image " + id_ + ": no patches");
  if (patches_.cols() != cls_.size()) {
    throw DimensionMismatch("image " + id_ + ": patch width differs from cls length");
  }
  require_finite_nonzero_rows(cls_.transpose(), "image " + id_ + " cls");
  require_finite_nonzero_rows(patches_, "image " + id_ + " patches");
  if (grid_ && static_cast<Eigen::Index>(grid_->rows) * grid_->cols != patches_.rows()) {
    throw DimensionMismatch("image " + id_ + ": patch grid does not match patch count");
  }
}

TextEncoding::TextEncoding(std::string id, std::string caption, Vector eot, Matrix tokens,
                           std::vector<std::string> token_texts,
                           std::vector<CharSpan> char_spans, std::vector<bool> content_mask)
    : id_(std::move(id)),
      caption_(std::move(caption)),
      eot_(std::move(eot)),
      tokens_(std::move(tokens)),
      token_texts_(std::move(token_texts)),
      char_spans_(std::move(char_spans)),
      content_mask_(std::move(content_mask)) {
  const std::string where = "text " + id_;
  if (eot_.size() < 1) throw DimensionMismatch(where + ": empty eot vector");
  if (tokens_.rows() < 1) throw DimensionMismatch(where + ": no tokens");
  if (tokens_.cols() != eot_.size()) {
    throw DimensionMismatch(where + ": token width differs from eot length");
  }
  const auto m = static_cast<std::size_t>(tokens_.rows());
  if (token_texts_.size() != m || char_spans_.size() != m || content_mask_.size() != m) {
    throw FormatError(where + ": token metadata length differs from token count");
  }
  require_finite_nonzero_rows(eot_.transpose(), where + " eot");
  require_finite_nonzero_rows(tokens_, where + " tokens");

  bool any_content = false;
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const CharSpan& s = char_spans_[i];
    if (s.end > caption_.size() || s.begin > s.end) {
      throw FormatError(where + ": char span of token " + std::to_string(i) + " out of range");
    }
    if (!content_mask_[i]) continue;
    if (s.empty()) {
      throw FormatError(where + ": content token " + std::to_string(i) + " has an empty span");
    }
    if (any_content && s.begin < prev_end) {
      throw FormatError(where + ": content token spans overlap or are out of order at " +
                        std::to_string(i));
    }
    prev_end = s.end;
    any_content = true;
  }
  if (!any_content) throw FormatError(where + ": no content tokens");
}

TextEncoding TextEncoding::with_tokens(Matrix tokens) const {
  return TextEncoding(id_, caption_, eot_, std::move(tokens), token_texts_, char_spans_,
                      content_mask_);
}

SimilarityMatrix similarity_matrix(const TextEncoding& text, const ImageEmbedding& image) {
  if (text.dim() != image.dim()) {
    throw DimensionMismatch("similarity_matrix: text " + text.id() + " has dim " +
                            std::to_string(text.dim()) + ", image " + image.id() + " has dim " +
                            std::to_string(image.dim()));
  }
  return SimilarityMatrix{cosine_matrix(text.tokens(), image.patches())};
}

}  // namespace bindscore
