#pragma once

#include <vector>

#include "pet/grid.hpp"

namespace pet {

// Channel projections of the criss-cross attention pass. wq and wk project
// C input channels to C' query/key channels, wv maps C to C. Row-major.
struct AttentionWeights {
  int proj_channels = 0;   // C'
  int channels = 0;        // C
  std::vector<double> wq;  // C' x C
  std::vector<double> wk;  // C' x C
  std::vector<double> wv;  // C x C
};

// One pass, at each position (i, j): attention scores between the query at
// (i, j) and the keys at every position in row i and column j (the position
// itself counted once), softmax-normalized; the output is the score-weighted
// sum of values plus the input as a residual. recursions = 2 applies the
// pass twice with the same weights, which propagates information between any
// two positions. Throws DimensionMismatch.
Volume criss_cross_attention(const Volume& features, const AttentionWeights& weights,
                             int recursions);

}  // namespace pet
