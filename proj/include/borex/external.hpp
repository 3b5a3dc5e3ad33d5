#ifndef BOREX_EXTERNAL_HPP
#define BOREX_EXTERNAL_HPP

#include <chrono>
#include <string>

#include "borex/classifier.hpp"

namespace borex {

/// Classifier served by a child process speaking JSON Lines on
/// stdin/stdout. Request: {"id":u64,"shape":[T,H,W,C],"tensor":"<base64
/// float32 LE>","label":"token"}; response: {"id":u64,"confidence":f}.
/// The server must answer every id exactly once, in any order.
class ExternalClassifier : public ClassifierPort {
 public:
  explicit ExternalClassifier(std::string command,
                              std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~ExternalClassifier() override;

  ExternalClassifier(const ExternalClassifier&) = delete;
  ExternalClassifier& operator=(const ExternalClassifier&) = delete;

  std::vector<double> evaluate(std::span<const ImageVolume> batch, const Label& label) override;
  std::vector<Label> label_set() const override;

  bool supports_concurrency() const override { return false; }

  /// Closes stdin and waits for the child; throws NonZeroExit on failure.
  void shutdown();

 private:
  void ensure_started();
  std::string read_line();

  std::string command_;
  std::chrono::milliseconds timeout_;
  int child_pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string read_buffer_;
  std::uint64_t next_id_ = 0;
};

std::string base64_encode(const unsigned char* data, std::size_t len);

}  // namespace borex

#endif  // BOREX_EXTERNAL_HPP
