#include "mtrans/batch_decode.hpp"

#include <omp.h>

namespace mtrans {

DecodeResult decode_one(const std::vector<const Model*>& models, const Sample& sample,
                        int beam_width, int action_slack) {
  const auto feats = encode_features(sample.features, models.front()->vocabs.features);
  if (models.size() > 1) return ensemble_decode(models, sample.x, feats, beam_width, action_slack);
  if (beam_width == 1) return greedy_decode(*models.front(), sample.x, feats, action_slack);
  return beam_decode(*models.front(), sample.x, feats, beam_width, action_slack);
}

std::vector<DecodeResult> decode_batch_serial(const std::vector<const Model*>& models,
                                              const std::vector<Sample>& samples, int beam_width,
                                              int action_slack) {
  check_compatible(models);
  std::vector<DecodeResult> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(decode_one(models, s, beam_width, action_slack));
  return out;
}

std::vector<DecodeResult> decode_batch_parallel(const std::vector<const Model*>& models,
                                                const std::vector<Sample>& samples,
                                                int beam_width, int action_slack) {
  check_compatible(models);
  std::vector<DecodeResult> out(samples.size());
  const auto count = static_cast<std::int64_t>(samples.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t k = 0; k < count; ++k) {
    out[k] = decode_one(models, samples[k], beam_width, action_slack);
  }
  return out;
}

std::vector<DecodeResult> decode_batch(const std::vector<const Model*>& models,
                                       const std::vector<Sample>& samples, int beam_width,
                                       int action_slack) {
  if (omp_get_max_threads() > 1) {
    return decode_batch_parallel(models, samples, beam_width, action_slack);
  }
  return decode_batch_serial(models, samples, beam_width, action_slack);
}

}  // namespace mtrans
