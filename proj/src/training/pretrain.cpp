#include "training/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "common/binary_io.hpp"

namespace ffae::training {

using objectives::Task;

void write_loss_log(const std::filesystem::path& path, std::span<const LossRecord> records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "step,task,loss\n";
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%.17g", r.loss);
        out << r.step << ',' << objectives::task_name(r.task) << ',' << buf << '\n';
    }
}

std::vector<LossRecord> read_loss_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<LossRecord> out;
    std::string line;
    std::getline(in, line);
    if (line != "step,task,loss") throw std::runtime_error(path.string() + ": bad loss log header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string step, task, loss;
        std::getline(fields, step, ',');
        std::getline(fields, task, ',');
        std::getline(fields, loss, ',');
        const auto t = objectives::parse_task(task);
        if (!t) throw std::runtime_error(path.string() + ": unknown task " + task);
        out.push_back({std::stoull(step), *t, std::stod(loss)});
    }
    return out;
}

AdamWConfig adamw_config(const RunConfig& c) {
    return {c.lr, c.beta1, c.beta2, c.adam_eps, c.weight_decay};
}

Pretrainer::Pretrainer(model::FashionModel& model, std::span<const objectives::TrainingItem> data,
                       const RunConfig& config)
    : model_(model),
      data_(data),
      config_(config),
      schedule_(config.schedule()),
      optimizer_(adamw_config(config)),
      rng_(Rng::derive_seed(config.seed, 77)) {
    config_.validate();
    if (data_.empty()) throw std::invalid_argument("pretraining needs at least one item");
    if (data_.size() < 2 && schedule_.probability(Task::itm) > 0.0)
        throw std::invalid_argument("ITM needs at least two items");
}

void Pretrainer::record(Task task, double loss) {
    LossRecord r{step_, task, loss};
    log_.push_back(r);
    auto& s = stats_[static_cast<std::size_t>(task)];
    s.ema = s.count == 0 ? loss : 0.95 * s.ema + 0.05 * loss;
    s.last = loss;
    ++s.count;
}

void Pretrainer::step() {
    const Task task = objectives::sample_task(schedule_, rng_);
    const std::size_t b = std::min(config_.batch_size, data_.size());
    std::vector<const objectives::TrainingItem*> batch;
    for (std::size_t i : rng_.sample_without_replacement(data_.size(), b)) batch.push_back(&data_[i]);

    constexpr auto mask_id = corpus::Vocabulary::mask_id();
    const auto aetp = [&] {
        std::vector<objectives::MaskedText> masked;
        for (const auto* item : batch) masked.push_back(objectives::mask_attributes(item->text, config_.aetp_n, rng_, mask_id));
        return objectives::loss_aetp(model_, masked, batch);
    };
    const auto mlm = [&] {
        std::vector<objectives::MaskedText> masked;
        for (const auto* item : batch) masked.push_back(objectives::mask_subwords(item->text, config_.mlm_ratio, rng_, mask_id));
        return objectives::loss_mlm(model_, masked, batch);
    };

    std::vector<std::pair<Task, ad::Value>> losses;
    const bool joint = schedule_.simultaneous_aetp_mlm && (task == Task::aetp || task == Task::mlm);
    if (joint) {
        losses.emplace_back(Task::aetp, aetp());
        losses.emplace_back(Task::mlm, mlm());
    } else {
        switch (task) {
            case Task::aetp: losses.emplace_back(task, aetp()); break;
            case Task::mlm: losses.emplace_back(task, mlm()); break;
            case Task::apir: losses.emplace_back(task, objectives::loss_apir(model_, batch, rng_)); break;
            case Task::itc: losses.emplace_back(task, objectives::loss_itc(model_, batch, config_.itc_temperature)); break;
            case Task::itm: losses.emplace_back(task, objectives::loss_itm(model_, batch, rng_)); break;
        }
    }

    ad::Value total = losses.front().second;
    for (std::size_t i = 1; i < losses.size(); ++i) total = ad::add(total, losses[i].second);
    for (const auto& [t, l] : losses)
        if (!std::isfinite(l.item()))
            throw std::runtime_error("non-finite " + std::string(objectives::task_name(t)) + " loss at step " +
                                     std::to_string(step_));

    model_.parameters().zero_grad();
    total.backward();
    optimizer_.set_lr(config_.lr_at(step_));
    optimizer_.step(model_.parameters());
    for (const auto& [t, l] : losses) record(t, l.item());
    ++step_;
}

void Pretrainer::run(std::size_t steps, const std::function<void(const LossRecord&)>& on_record) {
    for (std::size_t i = 0; i < steps; ++i) {
        const std::size_t before = log_.size();
        step();
        if (on_record)
            for (std::size_t j = before; j < log_.size(); ++j) on_record(log_[j]);
    }
}

void Pretrainer::save_checkpoint(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    ad::save_parameters(dir / "model.ffck", model_.parameters());
    model_.config().save(dir / "model.cfg");
    std::ofstream out(dir / "optimizer.ffos", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "optimizer.ffos").string());
    io::write_magic(out, "FFOS");
    io::write_u64(out, step_);
    io::write_string(out, rng_.state());
    optimizer_.save(out);
    write_loss_log(dir / "loss.csv", log_);
}

void Pretrainer::load_checkpoint(const std::filesystem::path& dir) {
    ad::load_parameters(dir / "model.ffck", model_.parameters());
    std::ifstream in(dir / "optimizer.ffos", std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + (dir / "optimizer.ffos").string());
    io::expect_magic(in, "FFOS", "optimizer state");
    step_ = io::read_u64(in);
    rng_.set_state(io::read_string(in));
    optimizer_.load(in);
    log_ = read_loss_log(dir / "loss.csv");
    stats_ = {};
    const auto restored = std::move(log_);
    log_.clear();
    const auto steps = step_;
    for (const auto& r : restored) {
        step_ = r.step;
        record(r.task, r.loss);
    }
    step_ = steps;
}

}  // namespace ffae::training
