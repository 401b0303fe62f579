#include "cli/io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

namespace hopwise::cli {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::DataError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& path) {
    const std::string content = read_file(path);
    try {
        return json::parse(content);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::DataError, path.string() + ": " + e.what());
    }
}

std::vector<JsonlLine> read_jsonl(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::DataError, "cannot open " + path.string());
    std::vector<JsonlLine> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back({number, json::parse(line)});
        } catch (const json::parse_error& e) {
            throw LineError(path.string(), number, std::string("malformed JSON: ") + e.what());
        }
    }
    return out;
}

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::DataError, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::DataError, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string to_jsonl(const std::vector<json>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

namespace {

void load_jsonl_docs(const fs::path& file, std::vector<Document>& docs) {
    for (const auto& line : read_jsonl(file)) {
        try {
            docs.push_back(document_from_json(line.value));
        } catch (const Error& e) {
            throw LineError(file.string(), line.line, e.what());
        }
    }
}

} // namespace

std::vector<Document> load_corpus(const fs::path& path) {
    std::vector<Document> docs;
    if (fs::is_regular_file(path)) {
        load_jsonl_docs(path, docs);
    } else if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            if (f.extension() == ".txt") {
                Document d;
                d.doc_id = f.stem().string();
                d.title = d.doc_id;
                d.body = read_file(f);
                docs.push_back(std::move(d));
            } else if (f.extension() == ".jsonl") {
                load_jsonl_docs(f, docs);
            }
        }
    } else {
        throw Error(ErrorCode::DataError, "corpus not found: " + path.string());
    }
    std::sort(docs.begin(), docs.end(), [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
    std::set<std::string> seen;
    for (const auto& d : docs) {
        if (!seen.insert(d.doc_id).second) throw Error(ErrorCode::DataError, "duplicate doc_id in corpus: " + d.doc_id);
    }
    return docs;
}

} // namespace hopwise::cli
