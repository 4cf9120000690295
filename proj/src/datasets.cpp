#include "forgetprobe/datasets.hpp"

#include <zlib.h>

#include <algorithm>
#include <filesystem>

#include "forgetprobe/errors.hpp"
#include "forgetprobe/rng.hpp"

namespace fp {

namespace {

// Reads a whole file through zlib, which transparently inflates gzip streams
// and passes plain files through untouched.
std::vector<std::uint8_t> read_file_maybe_gz(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw FormatError("cannot open " + path);
    std::vector<std::uint8_t> bytes;
    std::uint8_t buf[1 << 16];
    for (;;) {
        int n = gzread(f, buf, sizeof(buf));
        if (n < 0) {
            int err = 0;
            std::string msg = gzerror(f, &err);
            gzclose(f);
            throw FormatError(path + ": decompression failed: " + msg);
        }
        if (n == 0) break;
        bytes.insert(bytes.end(), buf, buf + n);
    }
    gzclose(f);
    return bytes;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off,
                        const std::string& path) {
    if (off + 4 > b.size())
        throw FormatError(path + ": truncated header at byte " + std::to_string(off));
    return (static_cast<std::uint32_t>(b[off]) << 24) |
           (static_cast<std::uint32_t>(b[off + 1]) << 16) |
           (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

// Accepts `path` as-is or with a .gz suffix.
std::string resolve_maybe_gz(const std::string& path) {
    namespace fs = std::filesystem;
    if (fs::exists(path)) return path;
    if (fs::exists(path + ".gz")) return path + ".gz";
    throw FormatError("missing data file " + path + " (also tried .gz)");
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

}  // namespace

LabeledSet load_idx(const std::string& images_path, const std::string& labels_path) {
    std::vector<std::uint8_t> img = read_file_maybe_gz(images_path);
    std::uint32_t magic = read_be32(img, 0, images_path);
    if (magic != kIdxImagesMagic)
        throw FormatError(images_path + ": bad magic 0x" +
                          [&] {
                              char hex[16];
                              std::snprintf(hex, sizeof(hex), "%08x", magic);
                              return std::string(hex);
                          }() +
                          " at byte 0 (want 0x00000803)");
    std::uint32_t n = read_be32(img, 4, images_path);
    std::uint32_t rows = read_be32(img, 8, images_path);
    std::uint32_t cols = read_be32(img, 12, images_path);
    std::size_t expected = 16 + static_cast<std::size_t>(n) * rows * cols;
    if (img.size() != expected)
        throw FormatError(images_path + ": expected " + std::to_string(expected) +
                          " bytes for " + std::to_string(n) + " images of " + std::to_string(rows) +
                          "x" + std::to_string(cols) + ", got " + std::to_string(img.size()));

    std::vector<std::uint8_t> lab = read_file_maybe_gz(labels_path);
    std::uint32_t lmagic = read_be32(lab, 0, labels_path);
    if (lmagic != kIdxLabelsMagic)
        throw FormatError(labels_path + ": bad magic 0x" +
                          [&] {
                              char hex[16];
                              std::snprintf(hex, sizeof(hex), "%08x", lmagic);
                              return std::string(hex);
                          }() +
                          " at byte 0 (want 0x00000801)");
    std::uint32_t ln = read_be32(lab, 4, labels_path);
    if (ln != n)
        throw FormatError(labels_path + ": has " + std::to_string(ln) + " labels but " +
                          images_path + " has " + std::to_string(n) + " images");
    if (lab.size() != 8 + static_cast<std::size_t>(ln))
        throw FormatError(labels_path + ": expected " + std::to_string(8 + ln) + " bytes, got " +
                          std::to_string(lab.size()));

    LabeledSet set;
    set.inputs = Matrix(static_cast<int>(n), static_cast<int>(rows * cols));
    const float scale = 1.0f / 255.0f;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * rows * cols; ++i)
        set.inputs.data[i] = static_cast<float>(img[16 + i]) * scale;
    set.labels.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) set.labels[i] = static_cast<int>(lab[8 + i]);
    return set;
}

LabeledSet load_cifar10(const std::vector<std::string>& batch_paths) {
    constexpr std::size_t kRecord = 3073;  // 1 label byte + 32*32*3 pixels
    constexpr int kDim = 3072;
    LabeledSet set;
    std::vector<std::vector<std::uint8_t>> raw;
    std::size_t total = 0;
    for (const std::string& path : batch_paths) {
        raw.push_back(read_file_maybe_gz(path));
        if (raw.back().empty() || raw.back().size() % kRecord != 0)
            throw FormatError(path + ": size " + std::to_string(raw.back().size()) +
                              " is not a multiple of the 3073-byte record");
        total += raw.back().size() / kRecord;
    }
    set.inputs = Matrix(static_cast<int>(total), kDim);
    set.labels.reserve(total);
    const float scale = 1.0f / 255.0f;
    std::size_t row = 0;
    for (std::size_t b = 0; b < raw.size(); ++b) {
        const std::vector<std::uint8_t>& bytes = raw[b];
        for (std::size_t rec = 0; rec * kRecord < bytes.size(); ++rec, ++row) {
            const std::uint8_t* p = bytes.data() + rec * kRecord;
            if (*p > 9)
                throw FormatError(batch_paths[b] + ": label " + std::to_string(*p) +
                                  " out of range at record " + std::to_string(rec));
            set.labels.push_back(static_cast<int>(*p));
            float* out = set.inputs.row(static_cast<int>(row));
            for (int j = 0; j < kDim; ++j) out[j] = static_cast<float>(p[1 + j]) * scale;
        }
    }
    return set;
}

int Task::to_local(int global_label) const {
    for (std::size_t i = 0; i < classes.size(); ++i)
        if (classes[i] == global_label) return static_cast<int>(i);
    throw ConfigError("label " + std::to_string(global_label) + " not in task " +
                      std::to_string(index));
}

namespace {

// Copies the examples of `classes` out of `data`, preserving order.
LabeledSet filter_classes(const LabeledSet& data, const std::vector<int>& classes) {
    std::vector<int> keep;
    for (int i = 0; i < data.size(); ++i)
        if (std::find(classes.begin(), classes.end(), data.labels[i]) != classes.end())
            keep.push_back(i);
    LabeledSet out;
    out.inputs = Matrix(static_cast<int>(keep.size()), data.dim());
    out.labels.resize(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const float* src = data.inputs.row(keep[r]);
        std::copy(src, src + data.dim(), out.inputs.row(static_cast<int>(r)));
        out.labels[r] = data.labels[keep[r]];
    }
    return out;
}

void fill_local_labels(Task& task) {
    task.train_local.resize(task.train.labels.size());
    for (std::size_t i = 0; i < task.train.labels.size(); ++i)
        task.train_local[i] = task.to_local(task.train.labels[i]);
    task.val_local.resize(task.val.labels.size());
    for (std::size_t i = 0; i < task.val.labels.size(); ++i)
        task.val_local[i] = task.to_local(task.val.labels[i]);
}

std::vector<int> task_classes(int t, int classes_per_task) {
    std::vector<int> classes(classes_per_task);
    for (int j = 0; j < classes_per_task; ++j) classes[j] = t * classes_per_task + j;
    return classes;
}

void check_split_args(const LabeledSet& data, int n_tasks, int classes_per_task) {
    if (n_tasks <= 0 || classes_per_task <= 0)
        throw ConfigError("split_tasks: n_tasks and classes_per_task must be positive");
    int n_classes = n_tasks * classes_per_task;
    for (int lab : data.labels)
        if (lab < 0 || lab >= n_classes)
            throw ConfigError("split_tasks: label " + std::to_string(lab) +
                              " outside [0, " + std::to_string(n_classes) + ")");
}

}  // namespace

TaskSequence split_tasks(const LabeledSet& data, int n_tasks, int classes_per_task,
                         std::uint64_t seed) {
    check_split_args(data, n_tasks, classes_per_task);
    TaskSequence seq;
    for (int t = 0; t < n_tasks; ++t) {
        Task task;
        task.index = t + 1;
        task.classes = task_classes(t, classes_per_task);
        LabeledSet all = filter_classes(data, task.classes);
        if (all.size() < 10)
            throw ConfigError("split_tasks: task " + std::to_string(task.index) +
                              " has only " + std::to_string(all.size()) + " examples");

        std::vector<int> order(all.size());
        for (int i = 0; i < all.size(); ++i) order[i] = i;
        Rng rng(derive_seed(seed, /*stream=*/0x5a11d, static_cast<std::uint64_t>(t)));
        rng.shuffle(order);
        int n_val = all.size() / 10;

        task.val.inputs = Matrix(n_val, all.dim());
        task.val.labels.resize(n_val);
        task.train.inputs = Matrix(all.size() - n_val, all.dim());
        task.train.labels.resize(all.size() - n_val);
        for (int r = 0; r < all.size(); ++r) {
            const float* src = all.inputs.row(order[r]);
            if (r < n_val) {
                std::copy(src, src + all.dim(), task.val.inputs.row(r));
                task.val.labels[r] = all.labels[order[r]];
            } else {
                std::copy(src, src + all.dim(), task.train.inputs.row(r - n_val));
                task.train.labels[r - n_val] = all.labels[order[r]];
            }
        }
        fill_local_labels(task);
        seq.tasks.push_back(std::move(task));
    }
    return seq;
}

TaskSequence split_tasks(const LabeledSet& train, const LabeledSet& test, int n_tasks,
                         int classes_per_task, std::uint64_t /*seed*/) {
    check_split_args(train, n_tasks, classes_per_task);
    check_split_args(test, n_tasks, classes_per_task);
    TaskSequence seq;
    for (int t = 0; t < n_tasks; ++t) {
        Task task;
        task.index = t + 1;
        task.classes = task_classes(t, classes_per_task);
        task.train = filter_classes(train, task.classes);
        task.val = filter_classes(test, task.classes);
        if (task.train.size() == 0 || task.val.size() == 0)
            throw ConfigError("split_tasks: task " + std::to_string(task.index) +
                              " is empty in train or test");
        fill_local_labels(task);
        seq.tasks.push_back(std::move(task));
    }
    return seq;
}

BatchStream::BatchStream(const Matrix& inputs, const std::vector<int>& labels, int batch_size,
                         std::uint64_t seed)
    : inputs_(&inputs), labels_(&labels), batch_size_(batch_size), seed_(seed) {
    if (inputs.rows != static_cast<int>(labels.size()))
        throw DimensionError("BatchStream: " + std::to_string(inputs.rows) + " inputs vs " +
                             std::to_string(labels.size()) + " labels");
    if (batch_size <= 0) throw ConfigError("BatchStream: batch_size must be positive");
    order_.resize(inputs.rows);
    begin_epoch(0);
}

void BatchStream::begin_epoch(int epoch) {
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    Rng rng(derive_seed(seed_, /*stream=*/0xba7c4, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order_);
    cursor_ = 0;
}

bool BatchStream::next(Matrix& x, std::vector<int>& y) {
    if (cursor_ >= order_.size()) return false;
    std::size_t take = std::min<std::size_t>(batch_size_, order_.size() - cursor_);
    x = Matrix(static_cast<int>(take), inputs_->cols);
    y.resize(take);
    for (std::size_t r = 0; r < take; ++r) {
        int src = order_[cursor_ + r];
        std::copy(inputs_->row(src), inputs_->row(src) + inputs_->cols,
                  x.row(static_cast<int>(r)));
        y[r] = (*labels_)[src];
    }
    cursor_ += take;
    return true;
}

int BatchStream::n_batches() const {
    return static_cast<int>((order_.size() + batch_size_ - 1) / batch_size_);
}

bool is_known_dataset(const std::string& name) {
    return name == "mnist" || name == "fashion" || name == "cifar10";
}

int dataset_input_dim(const std::string& name) {
    if (name == "mnist" || name == "fashion") return 784;
    if (name == "cifar10") return 3072;
    throw ConfigError("unknown dataset '" + name + "'");
}

int dataset_default_bottleneck(const std::string& name) {
    if (name == "mnist" || name == "fashion") return 8;
    if (name == "cifar10") return 128;
    throw ConfigError("unknown dataset '" + name + "'");
}

int dataset_default_epochs_per_task(const std::string& name) {
    if (name == "mnist" || name == "fashion") return 20;
    if (name == "cifar10") return 40;
    throw ConfigError("unknown dataset '" + name + "'");
}

DatasetPair load_dataset(const std::string& name, const std::string& data_dir) {
    namespace fs = std::filesystem;
    if (!is_known_dataset(name)) throw ConfigError("unknown dataset '" + name + "'");
    fs::path root = fs::path(data_dir) / name;
    DatasetPair pair;
    if (name == "cifar10") {
        std::vector<std::string> train_paths;
        for (int i = 1; i <= 5; ++i)
            train_paths.push_back(
                resolve_maybe_gz((root / ("data_batch_" + std::to_string(i) + ".bin")).string()));
        pair.train = load_cifar10(train_paths);
        pair.test = load_cifar10({resolve_maybe_gz((root / "test_batch.bin").string())});
    } else {
        pair.train = load_idx(resolve_maybe_gz((root / "train-images-idx3-ubyte").string()),
                              resolve_maybe_gz((root / "train-labels-idx1-ubyte").string()));
        pair.test = load_idx(resolve_maybe_gz((root / "t10k-images-idx3-ubyte").string()),
                             resolve_maybe_gz((root / "t10k-labels-idx1-ubyte").string()));
    }
    return pair;
}

DatasetSummary verify_dataset(const std::string& name, const std::string& data_dir) {
    DatasetPair pair = load_dataset(name, data_dir);
    DatasetSummary s;
    s.name = name;
    s.n_train = pair.train.size();
    s.n_test = pair.test.size();
    s.dim = pair.train.dim();
    if (pair.test.dim() != pair.train.dim())
        throw FormatError(name + ": train dim " + std::to_string(pair.train.dim()) +
                          " != test dim " + std::to_string(pair.test.dim()));
    for (int lab : pair.train.labels) {
        if (lab < 0 || lab > 9)
            throw FormatError(name + ": train label " + std::to_string(lab) + " out of range");
        s.train_class_counts[static_cast<std::size_t>(lab)] += 1;
    }
    for (int lab : pair.test.labels) {
        if (lab < 0 || lab > 9)
            throw FormatError(name + ": test label " + std::to_string(lab) + " out of range");
        s.test_class_counts[static_cast<std::size_t>(lab)] += 1;
    }
    for (int c = 0; c < 10; ++c)
        if (s.train_class_counts[static_cast<std::size_t>(c)] == 0)
            throw FormatError(name + ": class " + std::to_string(c) + " absent from train split");
    return s;
}

}  // namespace fp
