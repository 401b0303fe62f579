#pragma once

// File helpers shared by the subcommands.

#include "hopwise/core.hpp"
#include "hopwise/error.hpp"
#include "hopwise/schema.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace hopwise::cli {

/// A data error tied to a line of an input file.
class LineError : public Error {
public:
    LineError(std::string file, std::size_t line, const std::string& message)
        : Error(ErrorCode::DataError, file + ":" + std::to_string(line) + ": " + message),
          file_(std::move(file)), line_(line) {}

    const std::string& file() const { return file_; }
    std::size_t line() const { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

struct JsonlLine {
    std::size_t line = 0;
    json value;
};

std::string read_file(const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);

/// Skips blank lines. Throws LineError on malformed JSON.
std::vector<JsonlLine> read_jsonl(const std::filesystem::path& path);

/// Writes through a temporary sibling file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string to_jsonl(const std::vector<json>& records);

/// A directory of `*.txt` files (doc_id = file stem) and/or `*.jsonl` document records, or a
/// single `.jsonl` file. Documents are returned sorted by doc_id.
std::vector<Document> load_corpus(const std::filesystem::path& path);

} // namespace hopwise::cli
