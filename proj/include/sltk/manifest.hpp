#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sltk {

// Ordered key=value text document. Blank lines and lines starting with '#'
// are skipped when parsing.
class Manifest {
 public:
  using Entry = std::pair<std::string, std::string>;

  static Manifest parse(std::string_view text);
  std::string to_text() const;

  void set(std::string key, std::string value);
  void add(std::string key, std::string value);
  std::optional<std::string> get(std::string_view key) const;
  bool empty() const { return entries_.empty(); }

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  friend bool operator==(const Manifest&, const Manifest&) = default;

 private:
  std::vector<Entry> entries_;
};

}  // namespace sltk
