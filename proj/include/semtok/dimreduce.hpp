#pragma once

#include <cstddef>

#include "semtok/embed_store.hpp"

namespace semtok {

// Keeps the leading d coordinates of every row, 1 <= d <= dim.
EmbeddingMatrix truncate(const EmbeddingMatrix& emb, std::size_t d);

// Appends zero columns up to target_dim >= dim.
EmbeddingMatrix zero_pad(const EmbeddingMatrix& emb, std::size_t target_dim);

}  // namespace semtok
