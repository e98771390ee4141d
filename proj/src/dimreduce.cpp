#include "semtok/dimreduce.hpp"

#include <algorithm>

#include "semtok/error.hpp"

namespace semtok {

EmbeddingMatrix truncate(const EmbeddingMatrix& emb, std::size_t d) {
  if (d < 1 || d > emb.dim())
    throw Error(ErrorCode::OutOfRange,
                "d=" + std::to_string(d) + " outside [1, " + std::to_string(emb.dim()) + "]");
  EmbeddingMatrix out(emb.rows(), d);
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    auto src = emb.row(i);
    std::copy_n(src.begin(), d, out.row(i).begin());
  }
  return out;
}

EmbeddingMatrix zero_pad(const EmbeddingMatrix& emb, std::size_t target_dim) {
  if (target_dim < emb.dim())
    throw Error(ErrorCode::OutOfRange, "target dimension " + std::to_string(target_dim) +
                                           " is below current " + std::to_string(emb.dim()));
  EmbeddingMatrix out(emb.rows(), target_dim);
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    auto src = emb.row(i);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace semtok
