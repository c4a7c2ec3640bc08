#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "tonemap/normalize.hpp"
#include "tonemap/rng.hpp"

namespace tonemap {

struct ImagePair {
  std::string stem;
  std::string hdr_path;
  std::string ldr_path;
};

// Pairs <root>/hdr/<stem>.{hdr,pfm} with <root>/ldr/<stem>.{png,pfm}. Every
// HDR must have exactly one LDR partner.
struct DatasetIndex {
  std::vector<ImagePair> pairs;
  std::string split = "train";
  uint64_t shuffle_seed = 0;

  static DatasetIndex scan(const std::string& root, const std::string& split = "train", uint64_t shuffle_seed = 0);
  // Deterministic Fisher-Yates order under shuffle_seed.
  std::vector<size_t> order() const;
};

// HDR normalised, LDR as decoded.
struct LoadedPair {
  std::string stem;
  Tensorf hdr;
  Tensorf ldr;
  NormalizationRecord normalization;
};

LoadedPair load_pair(const ImagePair& pair);

struct Batch {
  Tensorf x;
  Tensorf y;
};

struct SampleOptions {
  int batch_size = 4;
  int crop_size = 64;
  bool horizontal_flip = true;
};

// Aligned random crops. Images smaller than the crop are reflect padded.
Batch sample_batch(const std::vector<LoadedPair>& pairs, const SampleOptions& options, Rng& rng);

// Draws batches either inline or from one producer thread feeding a bounded
// queue. Both modes consume the random stream in the same order.
class BatchLoader {
 public:
  BatchLoader(const std::vector<LoadedPair>& pairs, SampleOptions options, uint64_t seed, bool background = false,
              size_t queue_capacity = 4);
  ~BatchLoader();
  BatchLoader(const BatchLoader&) = delete;
  BatchLoader& operator=(const BatchLoader&) = delete;

  Batch next();

 private:
  void produce();

  const std::vector<LoadedPair>& pairs_;
  SampleOptions options_;
  Rng rng_;
  bool background_;
  size_t capacity_;
  std::deque<Batch> queue_;
  std::mutex mutex_;
  std::condition_variable cv_;
  bool stop_ = false;
  std::exception_ptr error_;
  std::thread worker_;
};

}  // namespace tonemap
