#include "txbench/common/hashing.hpp"

#include <openssl/sha.h>

#include "txbench/common/text.hpp"

namespace txbench {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  return text::hex_encode(digest, SHA256_DIGEST_LENGTH);
}

}  // namespace txbench
