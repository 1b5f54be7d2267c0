#include "fable/pool_io.hpp"

#include <fstream>
#include <system_error>

#include <nlohmann/json.hpp>

namespace fable {

namespace {

using nlohmann::json;

std::string outline_line(const Outline& outline) {
  json arr = json::array();
  for (const auto& a : outline.assignments) arr.push_back(a.token());
  return arr.dump();
}

Outline outline_from_line(const std::string& line, std::size_t line_no) {
  json arr;
  try {
    arr = json::parse(line);
  } catch (const json::exception& e) {
    throw PoolError("pool line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!arr.is_array()) {
    throw PoolError("pool line " + std::to_string(line_no) + ": expected a JSON array");
  }
  std::vector<std::string> tokens;
  tokens.reserve(arr.size());
  for (const auto& t : arr) {
    if (!t.is_string()) {
      throw PoolError("pool line " + std::to_string(line_no) + ": tokens must be strings");
    }
    tokens.push_back(t.get<std::string>());
  }
  return Outline::from_tokens(tokens);
}

std::string header_line(const PoolHeader& h) {
  json obj;
  obj["spec_fingerprint"] = h.spec_fingerprint;
  obj["count"] = h.count;
  obj["generator_version"] = h.generator_version;
  return obj.dump();  // keys serialize in sorted order, byte-stable
}

PoolHeader parse_header(const std::string& line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::exception& e) {
    throw PoolError(std::string("pool header: ") + e.what());
  }
  if (!obj.is_object() || !obj.contains("spec_fingerprint") || !obj.contains("count")) {
    throw PoolError("pool header must be an object with spec_fingerprint and count");
  }
  PoolHeader h;
  h.spec_fingerprint = obj.at("spec_fingerprint").get<std::string>();
  h.count = obj.at("count").get<std::uint64_t>();
  h.generator_version = obj.value("generator_version", "");
  return h;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pool file: " + path.string());
  return in;
}

}  // namespace

PoolWriteResult write_pool_file(const OutlineSpec& spec, const std::filesystem::path& path,
                                const EnumerationOptions& options) {
  const std::filesystem::path body_path = path.string() + ".body.tmp";
  const std::filesystem::path staged_path = path.string() + ".tmp";

  PoolWriteResult result;
  result.spec_fingerprint = spec_fingerprint(spec);
  {
    std::ofstream body(body_path, std::ios::trunc);
    if (!body) throw IoError("cannot write pool file: " + body_path.string());
    enumerate_all(
        spec,
        [&](const Outline& o) {
          body << outline_line(o) << '\n';
          ++result.count;
        },
        options);
    body.flush();
    if (!body) throw IoError("write failure on " + body_path.string());
  }

  {
    std::ofstream out(staged_path, std::ios::trunc);
    if (!out) throw IoError("cannot write pool file: " + staged_path.string());
    out << header_line({result.spec_fingerprint, result.count, kGeneratorVersion}) << '\n';
    std::ifstream body(body_path, std::ios::binary);
    out << body.rdbuf();
    out.flush();
    if (!out) throw IoError("write failure on " + staged_path.string());
  }

  std::error_code ec;
  std::filesystem::remove(body_path, ec);
  std::filesystem::rename(staged_path, path, ec);
  if (ec) throw IoError("cannot move pool file into place: " + ec.message());
  return result;
}

PoolHeader read_pool_header(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw PoolError("pool file is empty: " + path.string());
  return parse_header(line);
}

OutlinePool load_pool(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw PoolError("pool file is empty: " + path.string());
  const PoolHeader header = parse_header(line);

  OutlinePool pool;
  pool.spec_fingerprint = header.spec_fingerprint;
  pool.outlines.reserve(header.count);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    pool.outlines.push_back(outline_from_line(line, line_no));
  }
  if (pool.outlines.size() != header.count) {
    throw PoolError("pool header declares " + std::to_string(header.count) + " outlines, found " +
                    std::to_string(pool.outlines.size()));
  }
  return pool;
}

void for_each_pool_outline(const std::filesystem::path& path,
                           const std::function<void(const Outline&)>& fn) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw PoolError("pool file is empty: " + path.string());
  parse_header(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    fn(outline_from_line(line, line_no));
  }
}

}  // namespace fable
