#pragma once

// Decoding a whole dataset. The OpenMP kernel splits inputs across threads;
// the serial kernel is the reference it is tested against. Both return
// results in input order and are bit-identical.

#include <vector>

#include "mtrans/core.hpp"
#include "mtrans/decoder.hpp"

namespace mtrans {

// beam_width 1 decodes greedily; more than one model decodes as an ensemble.
std::vector<DecodeResult> decode_batch_serial(const std::vector<const Model*>& models,
                                              const std::vector<Sample>& samples, int beam_width,
                                              int action_slack = kDefaultActionSlack);

std::vector<DecodeResult> decode_batch_parallel(const std::vector<const Model*>& models,
                                                const std::vector<Sample>& samples,
                                                int beam_width,
                                                int action_slack = kDefaultActionSlack);

// Parallel kernel when more than one OpenMP thread is available.
std::vector<DecodeResult> decode_batch(const std::vector<const Model*>& models,
                                       const std::vector<Sample>& samples, int beam_width,
                                       int action_slack = kDefaultActionSlack);

DecodeResult decode_one(const std::vector<const Model*>& models, const Sample& sample,
                        int beam_width, int action_slack = kDefaultActionSlack);

}  // namespace mtrans
