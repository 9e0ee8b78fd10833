#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace insideout {

/// Per-feature OOD classification of a sample coordinate.
enum class OODStatus { No, Inside, Outside };

std::string_view to_string(OODStatus status) noexcept;
OODStatus status_from_string(std::string_view name);

struct ProfileCounts {
  std::size_t no = 0;
  std::size_t inside = 0;
  std::size_t outside = 0;

  [[nodiscard]] std::size_t total() const noexcept { return no + inside + outside; }
  bool operator==(const ProfileCounts&) const = default;
};

/// The per-feature status vector of one sample together with its counts.
class Profile {
 public:
  Profile() = default;
  explicit Profile(std::vector<OODStatus> statuses);

  /// First `inside` features Inside, next `outside` Outside, rest No.
  static Profile from_counts(const ProfileCounts& counts);

  [[nodiscard]] const std::vector<OODStatus>& statuses() const noexcept { return statuses_; }
  [[nodiscard]] const ProfileCounts& counts() const noexcept { return counts_; }
  [[nodiscard]] std::size_t size() const noexcept { return statuses_.size(); }
  OODStatus operator[](std::size_t i) const noexcept { return statuses_[i]; }

  bool operator==(const Profile&) const = default;

 private:
  std::vector<OODStatus> statuses_;
  ProfileCounts counts_;
};

}  // namespace insideout
