// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bindscore/error.hpp"

namespace bindscore {

template <typename Scalar>
using RowMatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Bundles store f32; everything downstream of the reader is f64.
using Matrix = RowMatrixX<double>;
using Vector = VectorX<double>;

/// Half-open character interval [begin, end) into a caption.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool empty() const noexcept { return end <= begin; }
  bool intersects(const CharSpan& o) const noexcept {
    return !empty() && !o.empty() && begin < o.end && o.begin < end;
  }
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

/// Half-open token-index interval [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool empty() const noexcept { return end <= begin; }
  std::size_t size() const noexcept { return empty() ? 0 : end - begin; }
  bool overlaps(const TokenSpan& o) const noexcept {
    return !empty() && !o.empty() && begin < o.end && o.begin < end;
  }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct PatchGrid {
  int rows = 0;
  int cols = 0;
};

/// Cosine similarity of two vectors. Throws DegenerateInput on a zero-norm
/// operand and DimensionMismatch on a length mismatch.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& u,
                                 const Eigen::MatrixBase<DerivedB>& v) {
  using Scalar = typename DerivedA::Scalar;
  if (u.size() != v.size() || u.size() == 0) {
    throw DimensionMismatch("cosine: operands must have equal non-zero length");
  }
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) {
    throw DegenerateInput("cosine: zero-norm vector");
  }
  Scalar dot(0);
  for (Eigen::Index i = 0; i < u.size(); ++i) dot += u(i) * v(i);
  return dot / (nu * nv);
}

/// Row-wise cosine matrix: out(i, j) = cosine(a.row(i), b.row(j)).
template <typename DerivedA, typename DerivedB>
RowMatrixX<typename DerivedA::Scalar> cosine_matrix(const Eigen::MatrixBase<DerivedA>& a,
                                                    const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.cols() != b.cols() || a.cols() == 0) {
    throw DimensionMismatch("cosine_matrix: row dimensions differ");
  }
  const VectorX<Scalar> na = a.rowwise().norm();
  const VectorX<Scalar> nb = b.rowwise().norm();
  if ((na.array() == Scalar(0)).any() || (nb.array() == Scalar(0)).any()) {
    throw DegenerateInput("cosine_matrix: zero-norm row");
  }
  RowMatrixX<Scalar> out = a * b.transpose();
  out.array().colwise() /= na.array();
  out.array().rowwise() /= nb.transpose().array();
  return out;
}

/// One image: global CLS vector plus N patch vectors.
class ImageEmbedding {
 public:
  ImageEmbedding(std::string id, Vector cls, Matrix patches,
                 std::optional<PatchGrid> grid = std::nullopt);

  const std::string& id() const noexcept { return id_; }
  Eigen::Index dim() const noexcept { return cls_.size(); }
  Eigen::Index num_patches() const noexcept { return patches_.rows(); }
  const Vector& cls() const noexcept { return cls_; }
  const Matrix& patches() const noexcept { return patches_; }
  const std::optional<PatchGrid>& grid() const noexcept { return grid_; }

 private:
  std::string id_;
  Vector cls_;
  Matrix patches_;
  std::optional<PatchGrid> grid_;
};

/// One caption: global EOT vector, M token vectors and token metadata.
class TextEncoding {
 public:
  TextEncoding(std::string id, std::string caption, Vector eot, Matrix tokens,
               std::vector<std::string> token_texts, std::vector<CharSpan> char_spans,
               std::vector<bool> content_mask);

  const std::string& id() const noexcept { return id_; }
  const std::string& caption() const noexcept { return caption_; }
  Eigen::Index dim() const noexcept { return eot_.size(); }
  Eigen::Index num_tokens() const noexcept { return tokens_.rows(); }
  const Vector& eot() const noexcept { return eot_; }
  const Matrix& tokens() const noexcept { return tokens_; }
  const std::vector<std::string>& token_texts() const noexcept { return token_texts_; }
  const std::vector<CharSpan>& char_spans() const noexcept { return char_spans_; }
  const std::vector<bool>& content_mask() const noexcept { return content_mask_; }

  /// Same metadata and EOT, new token matrix (validated like the original).
  TextEncoding with_tokens(Matrix tokens) const;

 private:
  std::string id_;
  std::string caption_;
  Vector eot_;
  Matrix tokens_;
  std::vector<std::string> token_texts_;
  std::vector<CharSpan> char_spans_;
  std::vector<bool> content_mask_;
};

/// Token-by-patch cosine similarities, shape (M, N).
struct SimilarityMatrix {
  Matrix values;

  Eigen::Index rows() const noexcept { return values.rows(); }
  Eigen::Index cols() const noexcept { return values.cols(); }
};

SimilarityMatrix similarity_matrix(const TextEncoding& text, const ImageEmbedding& image);

}  // namespace bindscore
