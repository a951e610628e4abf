#include "mlsync/errors.hpp"
#include "mlsync/labels.hpp"
#include "mlsync/trainer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

using namespace mlsync;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("mlsync_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

DatasetGenConfig toy_gen(int n) {
    DatasetGenConfig g;
    g.n_samples = n;
    g.channel = TrainChannel::SinglePath;
    g.snr_min_db = g.snr_max_db = std::numeric_limits<double>::infinity();
    g.master_seed = 21;
    return g;
}

bool same_report(const TrainReport& a, const TrainReport& b) {
    if (a.epochs.size() != b.epochs.size() || a.steps != b.steps || a.best_epoch != b.best_epoch ||
        a.best_val_mse != b.best_val_mse || a.stop_reason != b.stop_reason)
        return false;
    for (std::size_t i = 0; i < a.epochs.size(); ++i)
        if (a.epochs[i].train_mse != b.epochs[i].train_mse || a.epochs[i].val_mse != b.epochs[i].val_mse)
            return false;
    return true;
}

} // namespace

TEST(GenerateDataset, ReferenceSplit) {
    auto c = SystemConfig::make(128, 32);
    DatasetGenConfig g;
    g.n_samples = 50000;
    auto d = generate_dataset(g, c);
    EXPECT_EQ(d.n_train, 37500);
    EXPECT_EQ(d.n_val(), 12500);
    EXPECT_EQ(d.inputs.size(), 50000u * 160u);
    EXPECT_EQ(d.labels.size(), 50000u * 160u);
}

TEST(GenerateDataset, TauHatUniformAndLabelsConsistent) {
    auto c = SystemConfig::make(128, 32);
    DatasetGenConfig g;
    g.n_samples = 100000;
    g.master_seed = 3;
    auto d = generate_dataset(g, c);
    std::map<int, int> counts;
    for (int i = 0; i < d.size(); ++i) {
        const auto& m = d.meta[i];
        ++counts[m.tau_hat];
        ASSERT_EQ(m.tau_true, m.tau_hat); // training labels are correct by construction
        ASSERT_GE(m.theta, 0);
        ASSERT_LE(m.theta, 127);
        ASSERT_GE(m.eta, 0.01);
        ASSERT_LT(m.eta, 0.2);
        ASSERT_GE(m.snr_db, 0.0);
        ASSERT_LT(m.snr_db, 20.0);
        auto expected = make_label(m.theta, m.tau_hat, c).gamma;
        auto row = d.label_row(i);
        ASSERT_TRUE(std::equal(row.begin(), row.end(), expected.begin(), expected.end()));
        ASSERT_EQ(std::count(row.begin(), row.end(), 1), 32 - m.tau_hat);
    }
    ASSERT_EQ(counts.size(), 16u);
    double chi2 = 0.0;
    for (auto [v, k] : counts) chi2 += (k - 6250.0) * (k - 6250.0) / 6250.0;
    EXPECT_LT(chi2, 30.58); // chi-square, 15 dof, p = 0.01
}

TEST(GenerateDataset, FixedTauHatAndRawSignalInputs) {
    auto c = SystemConfig::make(64, 16);
    DatasetGenConfig g;
    g.n_samples = 200;
    g.fixed_tau_hat = 11;
    g.variant = net::Variant::RawSignalProp;
    auto d = generate_dataset(g, c);
    EXPECT_EQ(d.input_len, c.obs_len);
    for (const auto& m : d.meta) {
        EXPECT_EQ(m.tau_hat, 11);
        EXPECT_EQ(m.tau_true, 11);
    }
    for (int i = 0; i < d.size(); ++i) {
        auto row = d.input_row(i);
        EXPECT_FLOAT_EQ(*std::max_element(row.begin(), row.end()), 1.0f);
    }
}

TEST(GenerateDataset, IndependentOfWorkerCount) {
    auto c = SystemConfig::make(64, 16);
    DatasetGenConfig g;
    g.n_samples = 301;
    auto a = generate_dataset(g, c, 1);
    auto b = generate_dataset(g, c, 4);
    EXPECT_EQ(a.inputs, b.inputs);
    EXPECT_EQ(a.labels, b.labels);
}

TEST(GenerateDataset, RejectsInvalidConfig) {
    auto c = SystemConfig::make(64, 16);
    DatasetGenConfig g;
    g.val_fraction = 1.0;
    EXPECT_THROW(generate_dataset(g, c), ConfigError);
    g = {};
    g.fixed_tau_hat = 16;
    EXPECT_THROW(generate_dataset(g, c), ConfigError);
    g = {};
    g.theta_max = 64;
    EXPECT_THROW(generate_dataset(g, c), ConfigError);
}

TEST(DatasetFiles, RoundTripAndCorruption) {
    auto c = SystemConfig::make(32, 8);
    DatasetGenConfig g;
    g.n_samples = 50;
    auto d = generate_dataset(g, c);
    auto dir = temp_dir("dataset");
    save_dataset(d, dir);
    auto back = load_dataset(dir);
    EXPECT_EQ(back.inputs, d.inputs);
    EXPECT_EQ(back.labels, d.labels);
    EXPECT_EQ(back.n_train, d.n_train);
    EXPECT_EQ(back.system, d.system);
    EXPECT_EQ(back.gen.digest(), d.gen.digest());
    for (int i = 0; i < d.size(); ++i) {
        EXPECT_EQ(back.meta[i].theta, d.meta[i].theta);
        EXPECT_EQ(back.meta[i].trial_seed, d.meta[i].trial_seed);
        EXPECT_EQ(back.meta[i].eta, d.meta[i].eta);
    }
    std::filesystem::resize_file(dir / "labels.u8", 10);
    EXPECT_THROW(load_dataset(dir), FormatError);
}

TEST(Train, ToyTaskIsLearned) {
    auto c = SystemConfig::make(16, 4);
    auto d = generate_dataset(toy_gen(500), c);
    TrainConfig t;
    t.alpha = 0.01;
    t.max_epochs = 60;
    t.patience = 60;
    auto r = train(d, t, net::NetworkArch::for_system(net::Variant::Prop, c));
    ASSERT_GE(r.report.epochs.size(), 2u);
    const double first = r.report.epochs[0].train_mse; // loss entering the first epoch
    const double last = r.report.epochs.back().train_mse;
    EXPECT_LT(last, 0.1 * first) << "initial " << first << " final " << last;
}

TEST(Train, ZeroStepSizeLeavesEverythingConstant) {
    auto c = SystemConfig::make(16, 4);
    auto d = generate_dataset(toy_gen(60), c);
    TrainConfig t;
    t.alpha = 0.0;
    t.max_epochs = 3;
    auto arch = net::NetworkArch::for_system(net::Variant::Prop, c);
    auto r = train(d, t, arch);
    EXPECT_TRUE(r.params.same_values(net::init_network(arch, t.seed)));
    for (const auto& e : r.report.epochs) {
        EXPECT_EQ(e.train_mse, r.report.epochs[0].train_mse);
        EXPECT_EQ(e.val_mse, r.report.epochs[0].val_mse);
    }
}

TEST(Train, DeterministicReport) {
    auto c = SystemConfig::make(16, 4);
    DatasetGenConfig g;
    g.n_samples = 120;
    auto d = generate_dataset(g, c);
    TrainConfig t;
    t.alpha = 0.01;
    t.batch_size = 4;
    t.max_epochs = 5;
    auto arch = net::NetworkArch::for_system(net::Variant::DnnBaseline, c);
    auto a = train(d, t, arch);
    auto b = train(d, t, arch);
    EXPECT_TRUE(same_report(a.report, b.report));
    EXPECT_TRUE(a.params.same_values(b.params));
}

TEST(Train, BestModelHasMinimumValidationLoss) {
    auto c = SystemConfig::make(16, 4);
    auto d = generate_dataset(toy_gen(200), c);
    TrainConfig t;
    t.alpha = 0.5; // large enough to make validation loss noisy
    t.max_epochs = 15;
    t.patience = 3;
    auto r = train(d, t, net::NetworkArch::for_system(net::Variant::Prop, c));
    double min_val = r.report.epochs[0].val_mse;
    for (const auto& e : r.report.epochs) min_val = std::min(min_val, e.val_mse);
    EXPECT_EQ(r.report.best_val_mse, min_val);
    EXPECT_EQ(r.report.epochs[r.report.best_epoch].val_mse, min_val);
    EXPECT_NEAR(dataset_mse(r.params, d, d.n_train, d.size()), min_val, 1e-12);
}

TEST(Train, StepLimitAndDimensionChecks) {
    auto c = SystemConfig::make(16, 4);
    auto d = generate_dataset(toy_gen(100), c);
    TrainConfig t;
    t.max_steps = 7;
    auto r = train(d, t, net::NetworkArch::for_system(net::Variant::Prop, c));
    EXPECT_EQ(r.report.steps, 7);
    EXPECT_EQ(r.report.stop_reason, "max_steps");
    EXPECT_THROW(train(d, t, net::NetworkArch::for_system(net::Variant::RawSignalProp, c)), ConfigError);
}

TEST(Train, DivergenceAborts) {
    auto c = SystemConfig::make(16, 4);
    auto d = generate_dataset(toy_gen(40), c);
    d.inputs[3] = std::numeric_limits<float>::infinity();
    TrainConfig t;
    EXPECT_THROW(train(d, t, net::NetworkArch::for_system(net::Variant::Prop, c)), TrainingError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    auto c = SystemConfig::make(32, 8);
    ModelCheckpoint ck;
    ck.method = "PropFixedTau";
    ck.system = c;
    ck.config_digest = "abc123";
    ck.params = net::init_network(net::NetworkArch::for_system(net::Variant::Prop, c), 5);
    ck.params.dense[0].bias[2] = -1.0 / 3.0;
    auto path = temp_dir("ckpt") / "m.ckpt";
    save_checkpoint(ck, path);
    auto back = load_checkpoint(path);
    EXPECT_EQ(back.method, "PropFixedTau");
    EXPECT_EQ(back.config_digest, "abc123");
    EXPECT_EQ(back.system, c);
    EXPECT_TRUE(back.params.same_values(ck.params));
    EXPECT_NO_THROW(require_compatible(back, c));
    EXPECT_THROW(require_compatible(back, SystemConfig::make(64, 8)), ConfigError);
}

TEST(Checkpoint, CorruptFilesRejected) {
    auto c = SystemConfig::make(32, 8);
    ModelCheckpoint ck;
    ck.method = "Dnn";
    ck.system = c;
    ck.params = net::init_network(net::NetworkArch::for_system(net::Variant::DnnBaseline, c), 5);
    auto dir = temp_dir("ckpt_bad");
    save_checkpoint(ck, dir / "ok.ckpt");

    std::filesystem::copy_file(dir / "ok.ckpt", dir / "trunc.ckpt");
    std::filesystem::resize_file(dir / "trunc.ckpt", std::filesystem::file_size(dir / "ok.ckpt") - 9);
    EXPECT_THROW(load_checkpoint(dir / "trunc.ckpt"), FormatError);

    std::string bytes;
    {
        std::ifstream in(dir / "ok.ckpt", std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary);
        out << content;
    };
    std::string flipped = bytes;
    flipped.back() ^= 0x01;
    write("flip.ckpt", flipped);
    EXPECT_THROW(load_checkpoint(dir / "flip.ckpt"), FormatError);

    std::string version = bytes;
    version.replace(version.find(" 1\n"), 3, " 9\n");
    write("ver.ckpt", version);
    EXPECT_THROW(load_checkpoint(dir / "ver.ckpt"), FormatError);

    write("junk.ckpt", "hello");
    EXPECT_THROW(load_checkpoint(dir / "junk.ckpt"), FormatError);
    EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), FormatError);
}
