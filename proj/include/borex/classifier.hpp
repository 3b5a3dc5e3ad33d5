#ifndef BOREX_CLASSIFIER_HPP
#define BOREX_CLASSIFIER_HPP

#include <span>
#include <vector>

#include "borex/types.hpp"

namespace borex {

/// Black-box classifier capability. Implementations must be deterministic:
/// the same (image, label) always yields the same confidence in [0,1].
class ClassifierPort {
 public:
  virtual ~ClassifierPort() = default;

  virtual std::vector<double> evaluate(std::span<const ImageVolume> batch, const Label& label) = 0;
  virtual std::vector<Label> label_set() const = 0;

  /// False for implementations that cannot tolerate concurrent evaluate calls.
  virtual bool supports_concurrency() const { return true; }

  double evaluate_one(const ImageVolume& image, const Label& label) {
    return evaluate(std::span<const ImageVolume>(&image, 1), label)[0];
  }
};

/// Decorator that counts per-volume evaluations; used to verify call-count contracts.
class CountingClassifier : public ClassifierPort {
 public:
  explicit CountingClassifier(ClassifierPort& inner) : inner_(inner) {}

  std::vector<double> evaluate(std::span<const ImageVolume> batch, const Label& label) override {
    count_ += batch.size();
    return inner_.evaluate(batch, label);
  }
  std::vector<Label> label_set() const override { return inner_.label_set(); }

  std::size_t count() const { return count_; }
  void reset() { count_ = 0; }

 private:
  ClassifierPort& inner_;
  std::size_t count_ = 0;
};

}  // namespace borex

#endif  // BOREX_CLASSIFIER_HPP
