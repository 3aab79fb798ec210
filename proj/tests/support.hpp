#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "spar/corpus.hpp"
#include "spar/sparse.hpp"

namespace test_support {

/// Brute-force BM25: statistics recounted from the raw corpus, every passage
/// scored, full sort. Shares only the tokenizer with the library.
inline std::vector<std::pair<std::string, double>> bm25_oracle(
    const spar::Corpus& corpus, const std::string& query, std::size_t k, double k1, double b)
{
    std::vector<std::vector<std::string>> docs;
    double total = 0.0;
    for (const auto& p : corpus) {
        docs.push_back(spar::tokenize(p.text));
        total += static_cast<double>(docs.back().size());
    }
    const double n = static_cast<double>(docs.size());
    const double avgdl = total / n;
    auto terms = spar::tokenize(query);
    std::set<std::string> distinct(terms.begin(), terms.end());

    std::vector<std::pair<std::string, double>> scored;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        double s = 0.0;
        for (const auto& t : distinct) {
            double tf = static_cast<double>(std::count(docs[i].begin(), docs[i].end(), t));
            if (tf == 0.0) {
                continue;
            }
            double df = 0.0;
            for (const auto& d : docs) {
                df += std::find(d.begin(), d.end(), t) != d.end() ? 1.0 : 0.0;
            }
            double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            double dl = static_cast<double>(docs[i].size());
            s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        if (s > 0.0) {
            scored.emplace_back(corpus[i].id, s);
        }
    }
    std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        return x.second != y.second ? x.second > y.second : x.first < y.first;
    });
    if (scored.size() > k) {
        scored.resize(k);
    }
    return scored;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag)
        : path_(std::filesystem::temp_directory_path() / ("spar-test-" + tag + "-" + std::to_string(::getpid())))
    {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

}  // namespace test_support
