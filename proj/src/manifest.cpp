#include "ratingcbc/manifest.hpp"

#include "ratingcbc/error.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <fstream>
#include <iterator>
#include <memory>

namespace ratingcbc {

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error(ErrorClass::io, "sha256 failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

Manifest::Manifest(std::string command) {
  doc_["tool"] = "ratingcbc";
  doc_["version"] = std::string(tool_version);
  doc_["command"] = std::move(command);
  doc_["seed"] = nullptr;
  doc_["parameters"] = json::object();
  doc_["inputs"] = json::object();
  doc_["outputs"] = json::object();
}

void Manifest::input(const std::string& role, const std::filesystem::path& path) {
  doc_["inputs"][role] = {{"path", path.generic_string()}, {"sha256", sha256_file(path)}};
}

void Manifest::output(const std::filesystem::path& path) {
  doc_["outputs"][path.filename().generic_string()] = sha256_file(path);
}

void Manifest::write(const std::filesystem::path& path) const { write_text_file(path, dump(doc_)); }

} // namespace ratingcbc
