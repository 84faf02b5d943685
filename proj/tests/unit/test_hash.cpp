#include <doctest.h>

#include <fstream>

#include "uncage/errors.hpp"
#include "uncage/hash.hpp"

#include "test_util.hpp"

using namespace uncage;

TEST_CASE("fnv1a64 matches published reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL); // offset basis
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("hello world") == 0x779a65e7023cd2e7ULL);
  CHECK(fnv1a64("nnf") == 0x215ec61925926cf1ULL);
  CHECK(fnv1a64("synth-pair") == 0x8d7f75204a938930ULL);
}

TEST_CASE("fnv1a64_file hashes the byte content") {
  testutil::TempDir tmp("hash");
  const std::string path = tmp.file("payload.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << "hello world";
  }
  CHECK(fnv1a64_file(path) == fnv1a64("hello world"));

  const std::string empty = tmp.file("empty.bin");
  std::ofstream(empty, std::ios::binary);
  CHECK(fnv1a64_file(empty) == fnv1a64(""));

  CHECK_THROWS_AS(fnv1a64_file(tmp.file("missing.bin")), IoError);
}

TEST_CASE("hex64 is fixed-width lowercase hexadecimal") {
  CHECK(hex64(0) == "0000000000000000");
  CHECK(hex64(0xdeadbeefULL) == "00000000deadbeef");
  CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}
