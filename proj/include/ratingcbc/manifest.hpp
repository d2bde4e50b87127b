#pragma once

#include "ratingcbc/serialize.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace ratingcbc {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

inline constexpr std::string_view tool_version = "0.1.0";

/// Run record: content hashes of inputs and outputs, seed and parameters.
/// No timestamps, so equal runs give byte-identical manifests.
class Manifest {
public:
  explicit Manifest(std::string command);

  void seed(std::uint64_t s) { doc_["seed"] = s; }
  void parameter(const std::string& key, json value) { doc_["parameters"][key] = std::move(value); }
  void input(const std::string& role, const std::filesystem::path& path);
  void output(const std::filesystem::path& path);

  const json& document() const { return doc_; }
  void write(const std::filesystem::path& path) const;

private:
  json doc_;
};

} // namespace ratingcbc
