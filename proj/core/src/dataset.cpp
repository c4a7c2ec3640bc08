#include "tonemap/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <map>

#include "tonemap/errors.hpp"
#include "tonemap/image_io.hpp"
#include "tonemap/model.hpp"

namespace tonemap {
namespace {

namespace fs = std::filesystem;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::map<std::string, std::string> files_by_stem(const fs::path& dir, std::initializer_list<const char*> exts) {
  if (!fs::is_directory(dir)) throw IoError(dir.string(), "not a directory");
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower(entry.path().extension().string());
    if (std::find_if(exts.begin(), exts.end(), [&](const char* e) { return ext == e; }) == exts.end()) continue;
    const std::string stem = entry.path().stem().string();
    if (!out.emplace(stem, entry.path().string()).second) {
      throw IoError(entry.path().string(), "more than one file with stem '" + stem + "'");
    }
  }
  return out;
}

Tensorf crop_plane(const Tensorf& img, int64_t top, int64_t left, int size, bool flip) {
  Tensorf out(Shape{1, img.c(), size, size});
  for (int64_t c = 0; c < img.c(); ++c) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const int64_t sx = flip ? left + size - 1 - x : left + x;
        out.at(0, c, y, x) = img.at(0, c, top + y, sx);
      }
    }
  }
  return out;
}

}  // namespace

DatasetIndex DatasetIndex::scan(const std::string& root, const std::string& split, uint64_t shuffle_seed) {
  const auto hdr = files_by_stem(fs::path(root) / "hdr", {".hdr", ".pfm", ".pic"});
  const auto ldr = files_by_stem(fs::path(root) / "ldr", {".png", ".pfm"});
  DatasetIndex index;
  index.split = split;
  index.shuffle_seed = shuffle_seed;
  for (const auto& [stem, path] : hdr) {
    const auto it = ldr.find(stem);
    if (it == ldr.end()) throw IoError(path, "no LDR partner in " + (fs::path(root) / "ldr").string());
    index.pairs.push_back({stem, path, it->second});
  }
  if (index.pairs.empty()) throw IoError(root, "no HDR/LDR pairs found");
  return index;
}

std::vector<size_t> DatasetIndex::order() const {
  std::vector<size_t> idx(pairs.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(shuffle_seed);
  for (size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

LoadedPair load_pair(const ImagePair& pair) {
  LoadedPair out;
  out.stem = pair.stem;
  io::HdrImage hdr = io::read_image(pair.hdr_path);
  io::HdrImage ldr = io::read_image(pair.ldr_path);
  if (hdr.pixels.h() != ldr.pixels.h() || hdr.pixels.w() != ldr.pixels.w()) {
    throw DimensionError(pair.stem + ": HDR " + hdr.pixels.shape().str() + " and LDR " + ldr.pixels.shape().str() +
                         " differ in size");
  }
  NormalizedHdr norm = normalize_hdr(hdr.pixels);
  out.hdr = std::move(norm.image);
  out.normalization = norm.record;
  out.ldr = std::move(ldr.pixels);
  return out;
}

Batch sample_batch(const std::vector<LoadedPair>& pairs, const SampleOptions& options, Rng& rng) {
  if (pairs.empty()) throw ContractError("sample_batch: no pairs");
  if (options.crop_size <= 0 || options.crop_size % 8 != 0) {
    throw ConfigError("crop size must be a positive multiple of 8");
  }
  const int size = options.crop_size;
  Batch batch;
  batch.x = Tensorf(Shape{options.batch_size, 3, size, size});
  batch.y = Tensorf(Shape{options.batch_size, 3, size, size});
  for (int b = 0; b < options.batch_size; ++b) {
    const LoadedPair& pair = pairs[rng.below(pairs.size())];
    const Tensorf* hdr = &pair.hdr;
    const Tensorf* ldr = &pair.ldr;
    Tensorf hp, lp;
    if (hdr->h() < size || hdr->w() < size) {
      const int64_t ph = std::max<int64_t>(size, hdr->h()), pw = std::max<int64_t>(size, hdr->w());
      hp = pad_reflect(*hdr, ph, pw);
      lp = pad_reflect(*ldr, ph, pw);
      hdr = &hp;
      ldr = &lp;
    }
    const int64_t top = static_cast<int64_t>(rng.below(static_cast<uint64_t>(hdr->h() - size + 1)));
    const int64_t left = static_cast<int64_t>(rng.below(static_cast<uint64_t>(hdr->w() - size + 1)));
    const bool flip = options.horizontal_flip && rng.below(2) == 1;
    const Tensorf xc = crop_plane(*hdr, top, left, size, flip);
    const Tensorf yc = crop_plane(*ldr, top, left, size, flip);
    std::copy_n(xc.data(), xc.numel(), batch.x.plane(b, 0));
    std::copy_n(yc.data(), yc.numel(), batch.y.plane(b, 0));
  }
  return batch;
}

BatchLoader::BatchLoader(const std::vector<LoadedPair>& pairs, SampleOptions options, uint64_t seed, bool background,
                         size_t queue_capacity)
    : pairs_(pairs), options_(options), rng_(seed), background_(background), capacity_(std::max<size_t>(1, queue_capacity)) {
  if (background_) worker_ = std::thread([this] { produce(); });
}

BatchLoader::~BatchLoader() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void BatchLoader::produce() {
  for (;;) {
    Batch batch;
    try {
      batch = sample_batch(pairs_, options_, rng_);
    } catch (...) {
      std::lock_guard lock(mutex_);
      error_ = std::current_exception();
      cv_.notify_all();
      return;
    }
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return stop_ || queue_.size() < capacity_; });
    if (stop_) return;
    queue_.push_back(std::move(batch));
    cv_.notify_all();
  }
}

Batch BatchLoader::next() {
  if (!background_) return sample_batch(pairs_, options_, rng_);
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return !queue_.empty() || error_ != nullptr; });
  if (queue_.empty()) std::rethrow_exception(error_);
  Batch batch = std::move(queue_.front());
  queue_.pop_front();
  cv_.notify_all();
  return batch;
}

}  // namespace tonemap
