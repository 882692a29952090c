#include "codeprov/surrogate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "codeprov/error.hpp"
#include "codeprov/rng.hpp"

namespace codeprov {

namespace {

constexpr char kMagic[8] = {'C', 'P', 'S', 'U', 'R', 'R', 'G', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(std::is_unsigned_v<T>);
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<unsigned char>(value >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    require(in.gcount() == static_cast<std::streamsize>(sizeof(T)), ErrorCode::InvalidFormat,
            "truncated surrogate model file");
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(buf[i]) << (8 * i);
    }
    return value;
}

}  // namespace

std::uint64_t SurrogateModel::context_key(std::string_view history) const noexcept {
    const std::size_t len = std::min(history.size(), order_ - 1);
    std::uint64_t key = static_cast<std::uint64_t>(len) << 56;
    for (std::size_t i = history.size() - len; i < history.size(); ++i) {
        key = (key & (0xFFULL << 56)) | ((key << 8) & 0x00FFFFFFFFFFFFFFULL) |
              static_cast<unsigned char>(history[i]);
    }
    return key;
}

SurrogateModel SurrogateModel::train(const Corpus& corpus, std::size_t order, double smoothing) {
    require(!corpus.samples.empty(), ErrorCode::EmptyCorpus, "cannot train on an empty corpus");
    require(order >= 1 && order <= kMaxOrder, ErrorCode::InvalidArgument,
            "order must be in [1, " + std::to_string(kMaxOrder) + "]");
    require(smoothing > 0.0 && std::isfinite(smoothing), ErrorCode::InvalidArgument,
            "smoothing must be positive");
    SurrogateModel model;
    model.order_ = order;
    model.smoothing_ = smoothing;

    std::unordered_map<std::uint64_t, std::vector<Entry>> counts;
    std::uint64_t fp = 0xCBF29CE484222325ULL;
    for (const CodeSample& sample : corpus.samples) {
        const std::string_view text = sample.text;
        fp = fnv1a64(text, fp);
        fp = fnv1a64(std::string_view("\xFF", 1), fp);
        for (std::size_t i = 0; i < text.size(); ++i) {
            auto& successors = counts[model.context_key(text.substr(0, i))];
            const auto byte = static_cast<std::uint8_t>(text[i]);
            auto it = std::find_if(successors.begin(), successors.end(),
                                   [byte](const Entry& e) { return e.byte == byte; });
            if (it == successors.end()) {
                successors.push_back({byte, 1});
            } else {
                ++it->count;
            }
        }
    }
    model.fingerprint_ = fp;

    model.keys_.reserve(counts.size());
    for (const auto& [key, _] : counts) {
        model.keys_.push_back(key);
    }
    std::sort(model.keys_.begin(), model.keys_.end());
    for (std::uint64_t key : model.keys_) {
        auto& successors = counts[key];
        std::sort(successors.begin(), successors.end(),
                  [](const Entry& a, const Entry& b) { return a.byte < b.byte; });
        Range range{static_cast<std::uint32_t>(model.entries_.size()),
                    static_cast<std::uint32_t>(successors.size()), 0};
        for (const Entry& e : successors) {
            range.total += e.count;
            model.entries_.push_back(e);
        }
        model.ranges_.push_back(range);
    }
    model.build_index();
    return model;
}

void SurrogateModel::build_index() {
    index_.clear();
    index_.reserve(keys_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        index_.emplace(keys_[i], i);
    }
}

const SurrogateModel::Range* SurrogateModel::find(std::string_view history) const {
    auto it = index_.find(context_key(history));
    return it == index_.end() ? nullptr : &ranges_[it->second];
}

ByteDistribution SurrogateModel::conditional(std::string_view history) const {
    const Range* range = find(history);
    const double total = range == nullptr ? 0.0 : static_cast<double>(range->total);
    const double denom = total + static_cast<double>(kByteVocabulary) * smoothing_;
    ByteDistribution p;
    p.fill(smoothing_ / denom);
    if (range != nullptr) {
        for (std::uint32_t i = 0; i < range->length; ++i) {
            const Entry& e = entries_[range->offset + i];
            p[e.byte] = (static_cast<double>(e.count) + smoothing_) / denom;
        }
    }
    return p;
}

SurrogateModel::PositionStats SurrogateModel::position_stats(std::string_view history,
                                                             unsigned char actual) const {
    const Range* range = find(history);
    const std::uint32_t seen = range == nullptr ? 0 : range->length;
    const double total = range == nullptr ? 0.0 : static_cast<double>(range->total);
    const double denom = total + static_cast<double>(kByteVocabulary) * smoothing_;
    const Entry* first = range == nullptr ? nullptr : &entries_[range->offset];

    std::uint32_t actual_count = 0;
    for (std::uint32_t i = 0; i < seen; ++i) {
        if (first[i].byte == actual) {
            actual_count = first[i].count;
        }
    }

    // Rank: candidates ordered by probability descending, then byte ascending.
    std::size_t rank = 1;
    if (actual_count > 0) {
        for (std::uint32_t i = 0; i < seen; ++i) {
            if (first[i].count > actual_count || (first[i].count == actual_count && first[i].byte < actual)) {
                ++rank;
            }
        }
    } else {
        std::size_t seen_below = 0;
        for (std::uint32_t i = 0; i < seen; ++i) {
            seen_below += first[i].byte < actual ? 1 : 0;
        }
        rank += seen + (actual - seen_below);
    }

    const double p0 = smoothing_ / denom;
    double entropy = -static_cast<double>(kByteVocabulary - seen) * p0 * std::log(p0);
    for (std::uint32_t i = 0; i < seen; ++i) {
        const double p = (static_cast<double>(first[i].count) + smoothing_) / denom;
        entropy -= p * std::log(p);
    }
    const double log_likelihood = std::log((static_cast<double>(actual_count) + smoothing_) / denom);
    return {log_likelihood, rank, std::max(0.0, entropy)};
}

std::string SurrogateModel::id() const {
    std::ostringstream s;
    s << "surrogate:o" << order_ << ":s" << smoothing_ << ':' << std::hex << std::setw(16) << std::setfill('0')
      << fingerprint_;
    return s.str();
}

void SurrogateModel::save(std::ostream& out) const {
    out.write(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(out, kFormatVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(order_));
    put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(smoothing_));
    put_le<std::uint64_t>(out, fingerprint_);
    put_le<std::uint64_t>(out, keys_.size());
    put_le<std::uint64_t>(out, entries_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        put_le<std::uint64_t>(out, keys_[i]);
        put_le<std::uint32_t>(out, ranges_[i].length);
    }
    for (const Entry& e : entries_) {
        put_le<std::uint8_t>(out, e.byte);
        put_le<std::uint32_t>(out, e.count);
    }
    require(out.good(), ErrorCode::IoError, "failed writing surrogate model");
}

void SurrogateModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::IoError, "cannot write " + path.string());
    save(out);
}

SurrogateModel SurrogateModel::load(std::istream& in) {
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    require(in.gcount() == sizeof(magic) && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
            ErrorCode::InvalidFormat, "not a surrogate model file");
    const auto version = get_le<std::uint32_t>(in);
    require(version == kFormatVersion, ErrorCode::InvalidFormat,
            "unsupported surrogate model version " + std::to_string(version));
    SurrogateModel model;
    model.order_ = get_le<std::uint32_t>(in);
    model.smoothing_ = std::bit_cast<double>(get_le<std::uint64_t>(in));
    model.fingerprint_ = get_le<std::uint64_t>(in);
    require(model.order_ >= 1 && model.order_ <= kMaxOrder && model.smoothing_ > 0.0, ErrorCode::InvalidFormat,
            "corrupt surrogate model header");
    const auto n_contexts = get_le<std::uint64_t>(in);
    const auto n_entries = get_le<std::uint64_t>(in);
    model.keys_.reserve(n_contexts);
    model.ranges_.reserve(n_contexts);
    std::uint64_t offset = 0;
    for (std::uint64_t i = 0; i < n_contexts; ++i) {
        model.keys_.push_back(get_le<std::uint64_t>(in));
        const auto length = get_le<std::uint32_t>(in);
        model.ranges_.push_back({static_cast<std::uint32_t>(offset), length, 0});
        offset += length;
    }
    require(offset == n_entries, ErrorCode::InvalidFormat, "corrupt surrogate model context table");
    model.entries_.reserve(n_entries);
    for (std::uint64_t i = 0; i < n_entries; ++i) {
        const auto byte = get_le<std::uint8_t>(in);
        const auto count = get_le<std::uint32_t>(in);
        model.entries_.push_back({byte, count});
    }
    for (Range& r : model.ranges_) {
        for (std::uint32_t i = 0; i < r.length; ++i) {
            r.total += model.entries_[r.offset + i].count;
        }
    }
    model.build_index();
    return model;
}

SurrogateModel SurrogateModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::IoError, "cannot open " + path.string());
    return load(in);
}

bool SurrogateModel::operator==(const SurrogateModel& other) const {
    auto same_entries = std::equal(entries_.begin(), entries_.end(), other.entries_.begin(), other.entries_.end(),
                                   [](const Entry& a, const Entry& b) { return a.byte == b.byte && a.count == b.count; });
    auto same_ranges = std::equal(ranges_.begin(), ranges_.end(), other.ranges_.begin(), other.ranges_.end(),
                                  [](const Range& a, const Range& b) {
                                      return a.offset == b.offset && a.length == b.length && a.total == b.total;
                                  });
    return order_ == other.order_ &&
           std::bit_cast<std::uint64_t>(smoothing_) == std::bit_cast<std::uint64_t>(other.smoothing_) &&
           fingerprint_ == other.fingerprint_ && keys_ == other.keys_ && same_ranges && same_entries;
}

ScoredCode SurrogateScorer::score(std::string_view text) const {
    require(!text.empty(), ErrorCode::EmptyCode, "cannot score empty text");
    ScoredCode sc;
    sc.text = std::string(text);
    sc.scorer_id = id();
    sc.tokens.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto stats = model_->position_stats(text.substr(0, i), static_cast<unsigned char>(text[i]));
        ScoredToken t;
        t.text = std::string(1, text[i]);
        t.byte_start = i;
        t.byte_end = i + 1;
        t.log_likelihood = stats.log_likelihood;
        t.rank = stats.rank;
        t.entropy = stats.entropy;
        sc.tokens.push_back(std::move(t));
    }
    return sc;
}

double entropy_of(const ByteDistribution& p) {
    double h = 0.0;
    for (double x : p) {
        if (x > 0.0) {
            h -= x * std::log(x);
        }
    }
    return std::max(0.0, h);
}

ByteDistribution scaled_distribution(const ByteDistribution& p, double temperature, double top_p) {
    require(temperature > 0.0 && std::isfinite(temperature), ErrorCode::InvalidArgument,
            "temperature must be positive");
    require(top_p > 0.0 && top_p <= 1.0, ErrorCode::InvalidArgument, "top_p must be in (0, 1]");
    ByteDistribution logits;
    double max_logit = -INFINITY;
    for (std::size_t b = 0; b < kByteVocabulary; ++b) {
        logits[b] = p[b] > 0.0 ? std::log(p[b]) / temperature : -INFINITY;
        max_logit = std::max(max_logit, logits[b]);
    }
    ByteDistribution q;
    double sum = 0.0;
    for (std::size_t b = 0; b < kByteVocabulary; ++b) {
        q[b] = std::exp(logits[b] - max_logit);
        sum += q[b];
    }
    for (double& x : q) {
        x /= sum;
    }
    if (top_p >= 1.0) {
        return q;
    }
    std::array<std::uint8_t, kByteVocabulary> order;
    std::iota(order.begin(), order.end(), std::uint8_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::uint8_t a, std::uint8_t b) { return q[a] > q[b]; });
    double cumulative = 0.0;
    std::size_t keep = 0;
    while (keep < kByteVocabulary) {
        cumulative += q[order[keep]];
        ++keep;
        if (cumulative >= top_p) {
            break;
        }
    }
    ByteDistribution nucleus{};
    for (std::size_t i = 0; i < keep; ++i) {
        nucleus[order[i]] = q[order[i]] / cumulative;
    }
    return nucleus;
}

std::string sample_surrogate(const SurrogateModel& model, std::string_view prompt, const SamplingParams& params) {
    if (!params.greedy) {
        require(params.temperature > 0.0, ErrorCode::InvalidArgument, "temperature must be positive");
    }
    require(params.top_p > 0.0 && params.top_p <= 1.0, ErrorCode::InvalidArgument, "top_p must be in (0, 1]");
    Rng rng(params.seed);
    std::string history(prompt);
    const std::size_t prompt_len = history.size();
    for (std::size_t step = 0; step < params.max_len; ++step) {
        const ByteDistribution p = model.conditional(history);
        std::size_t chosen = 0;
        if (params.greedy) {
            chosen = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        } else {
            const ByteDistribution q = scaled_distribution(p, params.temperature, params.top_p);
            const double u = rng.uniform01();
            double cumulative = 0.0;
            chosen = kByteVocabulary;
            for (std::size_t b = 0; b < kByteVocabulary; ++b) {
                if (q[b] <= 0.0) {
                    continue;
                }
                cumulative += q[b];
                chosen = b;
                if (u < cumulative) {
                    break;
                }
            }
        }
        history.push_back(static_cast<char>(chosen));
    }
    return history.substr(prompt_len);
}

}  // namespace codeprov
