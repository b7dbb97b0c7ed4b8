#include "aoimec/neural.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace aoimec::nn {

ArchSpec actor_arch(int features, int n_wds, int hidden) {
  ArchSpec a;
  a.inputs = features;
  a.hidden = {hidden, hidden};
  a.outputs = 3 * n_wds;
  a.output_activation = Activation::Sigmoid;
  a.output_softmax = SoftmaxGroup{2 * n_wds, n_wds};
  return a;
}

ArchSpec value_arch(int features, int hidden) {
  ArchSpec a;
  a.inputs = features;
  a.hidden = {hidden, hidden};
  a.outputs = 1;
  a.output_activation = Activation::Identity;
  return a;
}

std::uint64_t flop_count(const ArchSpec& arch, Pass pass) {
  std::uint64_t total = 0;
  std::uint64_t prev = static_cast<std::uint64_t>(arch.inputs);
  for (int width : arch.hidden) {
    total += 2 * prev * static_cast<std::uint64_t>(width);
    prev = static_cast<std::uint64_t>(width);
  }
  total += 2 * prev * static_cast<std::uint64_t>(arch.outputs);
  return pass == Pass::Forward ? total : 2 * total;
}

double ParamSet::squared_norm() const {
  double s = 0.0;
  for (const auto& b : blocks)
    s += b.weights.squaredNorm() + b.a.squaredNorm() + b.b.squaredNorm();
  return s;
}

namespace {

DenseLayer make_dense(int in, int out, Activation act, std::mt19937_64& rng) {
  DenseLayer d;
  d.weights.resize(out, in);
  d.bias.resize(out);
  d.activation = act;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> init(-bound, bound);
  for (Eigen::Index r = 0; r < d.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < d.weights.cols(); ++c) d.weights(r, c) = init(rng);
  for (Eigen::Index j = 0; j < d.bias.size(); ++j) d.bias(j) = init(rng);
  return d;
}

BatchNormLayer make_bn(int features) {
  BatchNormLayer bn;
  bn.gamma = RowVector::Ones(features);
  bn.beta = RowVector::Zero(features);
  bn.running_mean = RowVector::Zero(features);
  bn.running_var = RowVector::Ones(features);
  return bn;
}

ParamSet zeros_like(const std::vector<Layer>& layers) {
  ParamSet p;
  for (const auto& layer : layers) {
    ParamSet::Block b;
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      b.weights = Matrix::Zero(d->weights.rows(), d->weights.cols());
      b.a = RowVector::Zero(d->bias.size());
    } else {
      const auto& bn = std::get<BatchNormLayer>(layer);
      b.a = RowVector::Zero(bn.gamma.size());
      b.b = RowVector::Zero(bn.beta.size());
    }
    p.blocks.push_back(std::move(b));
  }
  return p;
}

void activate(const DenseLayer& d, Matrix& z) {
  switch (d.activation) {
    case Activation::Relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::Sigmoid:
      z = (1.0 + (-z.array()).exp()).inverse().matrix();
      break;
    case Activation::Identity:
      break;
  }
}

void softmax_group(const SoftmaxGroup& g, const Matrix& pre, Matrix& out) {
  auto block = pre.middleCols(g.begin, g.count);
  for (Eigen::Index r = 0; r < pre.rows(); ++r) {
    const double m = block.row(r).maxCoeff();
    RowVector e = (block.row(r).array() - m).exp().matrix();
    out.row(r).segment(g.begin, g.count) = e / e.sum();
  }
}

struct BatchStats {
  RowVector mean, var;
};

Matrix run_layers(const std::vector<Layer>& layers, const Matrix& batch, Mode mode,
                  ForwardCache* cache, std::vector<BatchStats>* stats) {
  Matrix x = batch;
  if (cache) cache->layers.assign(layers.size(), {});
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const Layer& layer = layers[li];
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      if (x.cols() != d->inputs())
        throw std::invalid_argument("Mlp::forward: input has " + std::to_string(x.cols()) +
                                    " columns, layer expects " + std::to_string(d->inputs()));
      Matrix pre = x * d->weights.transpose();
      pre.rowwise() += d->bias;
      Matrix y = pre;
      activate(*d, y);
      if (d->softmax) softmax_group(*d->softmax, pre, y);
      if (cache) {
        cache->layers[li].input = std::move(x);
        cache->layers[li].output = y;
        cache->layers[li].mode = mode;
      }
      x = std::move(y);
    } else {
      const auto& bn = std::get<BatchNormLayer>(layer);
      RowVector mean, var;
      if (mode == Mode::Train) {
        if (x.rows() < 2) throw std::invalid_argument("Mlp::forward: train mode needs batch >= 2");
        mean = x.colwise().mean();
        var = (x.rowwise() - mean).array().square().colwise().mean().matrix();
        if (stats) stats->push_back({mean, var});
      } else {
        mean = bn.running_mean;
        var = bn.running_var;
      }
      RowVector inv_std = (var.array() + bn.eps).rsqrt().matrix();
      Matrix xhat = ((x.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
      Matrix y = (xhat.array().rowwise() * bn.gamma.array()).matrix();
      y.rowwise() += bn.beta;
      if (cache) {
        auto& e = cache->layers[li];
        e.input = std::move(x);
        e.xhat = std::move(xhat);
        e.inv_std = std::move(inv_std);
        e.output = y;
        e.mode = mode;
      }
      x = std::move(y);
    }
  }
  return x;
}

template <class F>
void for_each_block(std::vector<Layer>& layers, ParamSet* a, ParamSet* b, F&& fn) {
  for (std::size_t i = 0; i < layers.size(); ++i)
    fn(layers[i], a ? &a->blocks[i] : nullptr, b ? &b->blocks[i] : nullptr);
}

}  // namespace

Mlp::Mlp(const ArchSpec& arch, std::mt19937_64& rng) : arch_(arch) {
  if (arch.inputs < 1 || arch.outputs < 1)
    throw std::invalid_argument("Mlp: input and output widths must be positive");
  if (arch.output_softmax &&
      (arch.output_softmax->begin < 0 || arch.output_softmax->count < 1 ||
       arch.output_softmax->begin + arch.output_softmax->count > arch.outputs))
    throw std::invalid_argument("Mlp: softmax group outside the output head");
  int prev = arch.inputs;
  for (int width : arch.hidden) {
    layers_.emplace_back(make_dense(prev, width, Activation::Relu, rng));
    if (arch.batch_norm) layers_.emplace_back(make_bn(width));
    prev = width;
  }
  DenseLayer head = make_dense(prev, arch.outputs, arch.output_activation, rng);
  head.softmax = arch.output_softmax;
  layers_.emplace_back(std::move(head));
  adam_m_ = zeros_like(layers_);
  adam_v_ = zeros_like(layers_);
}

std::vector<Layer>& Mlp::mutable_layers() {
  touch();
  return layers_;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    if (const auto* d = std::get_if<DenseLayer>(&layer))
      n += static_cast<std::size_t>(d->weights.size() + d->bias.size());
    else
      n += 2 * static_cast<std::size_t>(std::get<BatchNormLayer>(layer).gamma.size());
  }
  return n;
}

Matrix Mlp::forward(const Matrix& batch, Mode mode, ForwardCache* cache) {
  return run(batch, mode, true, cache);
}

Matrix Mlp::evaluate(const Matrix& batch, Mode mode, ForwardCache* cache) const {
  Matrix out = run_layers(layers_, batch, mode, cache, nullptr);
  if (cache) {
    cache->version = version_;
    cache->owner = this;
  }
  return out;
}

Matrix Mlp::run(const Matrix& batch, Mode mode, bool update_stats, ForwardCache* cache) {
  std::vector<BatchStats> stats;
  Matrix out = run_layers(layers_, batch, mode, cache, update_stats ? &stats : nullptr);
  if (update_stats && !stats.empty()) {
    std::size_t k = 0;
    for (auto& layer : layers_) {
      if (auto* bn = std::get_if<BatchNormLayer>(&layer)) {
        bn->running_mean = bn->momentum * bn->running_mean + (1.0 - bn->momentum) * stats[k].mean;
        bn->running_var = bn->momentum * bn->running_var + (1.0 - bn->momentum) * stats[k].var;
        ++k;
      }
    }
  }
  if (cache) {
    // Running statistics do not enter the train-mode backward pass, so the
    // cache stays valid across their update.
    cache->version = version_;
    cache->owner = this;
  }
  return out;
}

Gradients Mlp::backward(const ForwardCache& cache, const Matrix& upstream) const {
  if (cache.owner != this || cache.version != version_ || cache.layers.size() != layers_.size())
    throw std::logic_error("Mlp::backward: stale or foreign forward cache");
  Gradients g;
  g.params = zeros_like(layers_);
  Matrix dy = upstream;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& entry = cache.layers[k];
    if (dy.rows() != entry.output.rows() || dy.cols() != entry.output.cols())
      throw std::invalid_argument("Mlp::backward: upstream gradient has the wrong shape");
    auto& block = g.params.blocks[k];
    if (const auto* d = std::get_if<DenseLayer>(&layers_[k])) {
      const Matrix& y = entry.output;
      Matrix dz;
      switch (d->activation) {
        case Activation::Relu:
          dz = (dy.array() * (y.array() > 0.0).cast<double>()).matrix();
          break;
        case Activation::Sigmoid:
          dz = (dy.array() * y.array() * (1.0 - y.array())).matrix();
          break;
        case Activation::Identity:
          dz = dy;
          break;
      }
      if (d->softmax) {
        const auto& grp = *d->softmax;
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
          auto yr = y.row(r).segment(grp.begin, grp.count);
          auto gr = dy.row(r).segment(grp.begin, grp.count);
          const double dot = yr.dot(gr);
          dz.row(r).segment(grp.begin, grp.count) = (yr.array() * (gr.array() - dot)).matrix();
        }
      }
      block.weights = dz.transpose() * entry.input;
      block.a = dz.colwise().sum();
      dy = dz * d->weights;
    } else {
      const auto& bn = std::get<BatchNormLayer>(layers_[k]);
      const Matrix& xhat = entry.xhat;
      block.a = (dy.array() * xhat.array()).colwise().sum().matrix();
      block.b = dy.colwise().sum();
      Matrix dxhat = (dy.array().rowwise() * bn.gamma.array()).matrix();
      if (entry.mode == Mode::Infer) {
        dy = (dxhat.array().rowwise() * entry.inv_std.array()).matrix();
      } else {
        const double m = static_cast<double>(dy.rows());
        RowVector sum_dxhat = dxhat.colwise().sum();
        RowVector sum_dxhat_xhat = (dxhat.array() * xhat.array()).colwise().sum().matrix();
        Matrix t = (m * dxhat.array()).matrix();
        t.rowwise() -= sum_dxhat;
        t -= (xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
        dy = ((t.array().rowwise() * entry.inv_std.array()) / m).matrix();
      }
    }
  }
  g.input = std::move(dy);
  return g;
}

void Mlp::adam_step(const ParamSet& grads, double lr, double beta1, double beta2, double eps) {
  if (grads.blocks.size() != layers_.size())
    throw std::invalid_argument("Mlp::adam_step: gradient layout mismatch");
  ++adam_t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t_));
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    if (param.size() != grad.size()) throw std::invalid_argument("Mlp::adam_step: shape mismatch");
    m = beta1 * m + (1.0 - beta1) * grad;
    v = (beta2 * v.array() + (1.0 - beta2) * grad.array().square()).matrix();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& g = grads.blocks[i];
    auto& m = adam_m_.blocks[i];
    auto& v = adam_v_.blocks[i];
    if (auto* d = std::get_if<DenseLayer>(&layers_[i])) {
      update(d->weights, g.weights, m.weights, v.weights);
      update(d->bias, g.a, m.a, v.a);
    } else {
      auto& bn = std::get<BatchNormLayer>(layers_[i]);
      update(bn.gamma, g.a, m.a, v.a);
      update(bn.beta, g.b, m.b, v.b);
    }
  }
  touch();
}

void Mlp::soft_update(const Mlp& primary, double omega) {
  if (!(primary.arch_ == arch_)) throw std::invalid_argument("Mlp::soft_update: architecture mismatch");
  auto blend = [omega](auto& target, const auto& src) { target = omega * src + (1.0 - omega) * target; };
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (auto* d = std::get_if<DenseLayer>(&layers_[i])) {
      const auto& s = std::get<DenseLayer>(primary.layers_[i]);
      blend(d->weights, s.weights);
      blend(d->bias, s.bias);
    } else {
      auto& bn = std::get<BatchNormLayer>(layers_[i]);
      const auto& s = std::get<BatchNormLayer>(primary.layers_[i]);
      blend(bn.gamma, s.gamma);
      blend(bn.beta, s.beta);
      blend(bn.running_mean, s.running_mean);
      blend(bn.running_var, s.running_var);
    }
  }
  touch();
}

namespace {

template <class M>
void append(std::vector<double>& out, const M& m) {
  // Row-major storage for matrices; vectors are contiguous either way.
  out.insert(out.end(), m.data(), m.data() + m.size());
}

template <class M>
void take(const std::vector<double>& in, std::size_t& pos, M& m) {
  if (pos + static_cast<std::size_t>(m.size()) > in.size())
    throw std::invalid_argument("Mlp: flat state too short");
  std::memcpy(m.data(), in.data() + pos, sizeof(double) * static_cast<std::size_t>(m.size()));
  pos += static_cast<std::size_t>(m.size());
}

}  // namespace

std::vector<double> Mlp::flat_state() const {
  std::vector<double> out;
  for (const auto& layer : layers_) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      append(out, d->weights);
      append(out, d->bias);
    } else {
      const auto& bn = std::get<BatchNormLayer>(layer);
      append(out, bn.gamma);
      append(out, bn.beta);
      append(out, bn.running_mean);
      append(out, bn.running_var);
    }
  }
  return out;
}

void Mlp::load_flat_state(const std::vector<double>& flat) {
  std::size_t pos = 0;
  for (auto& layer : layers_) {
    if (auto* d = std::get_if<DenseLayer>(&layer)) {
      take(flat, pos, d->weights);
      take(flat, pos, d->bias);
    } else {
      auto& bn = std::get<BatchNormLayer>(layer);
      take(flat, pos, bn.gamma);
      take(flat, pos, bn.beta);
      take(flat, pos, bn.running_mean);
      take(flat, pos, bn.running_var);
    }
  }
  if (pos != flat.size()) throw std::invalid_argument("Mlp: flat state too long");
  touch();
}

std::string describe(const ArchSpec& a) {
  std::ostringstream os;
  os << "in=" << a.inputs << " hidden=";
  for (std::size_t i = 0; i < a.hidden.size(); ++i) os << (i ? "," : "") << a.hidden[i];
  if (a.hidden.empty()) os << "-";
  os << " out=" << a.outputs << " act="
     << (a.output_activation == Activation::Sigmoid ? "sigmoid"
         : a.output_activation == Activation::Relu  ? "relu"
                                                    : "identity")
     << " softmax=";
  if (a.output_softmax) os << a.output_softmax->begin << ":" << a.output_softmax->count;
  else os << "-";
  os << " bn=" << (a.batch_norm ? 1 : 0);
  return os.str();
}

ArchSpec parse_arch(const std::string& text) {
  ArchSpec a;
  std::istringstream in(text);
  std::string tok;
  auto value = [](const std::string& t, const char* key) {
    const std::string prefix = std::string(key) + "=";
    if (t.rfind(prefix, 0) != 0) throw std::invalid_argument("parse_arch: expected " + prefix);
    return t.substr(prefix.size());
  };
  in >> tok;
  a.inputs = std::stoi(value(tok, "in"));
  in >> tok;
  if (auto h = value(tok, "hidden"); h != "-") {
    std::istringstream hs(h);
    std::string w;
    while (std::getline(hs, w, ',')) a.hidden.push_back(std::stoi(w));
  }
  in >> tok;
  a.outputs = std::stoi(value(tok, "out"));
  in >> tok;
  auto act = value(tok, "act");
  a.output_activation = act == "sigmoid" ? Activation::Sigmoid
                        : act == "relu"  ? Activation::Relu
                                         : Activation::Identity;
  in >> tok;
  if (auto s = value(tok, "softmax"); s != "-") {
    auto colon = s.find(':');
    a.output_softmax = SoftmaxGroup{std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
  }
  in >> tok;
  a.batch_norm = value(tok, "bn") == "1";
  return a;
}

void Mlp::save(std::ostream& out) const {
  std::vector<double> flat = flat_state();
  for (const ParamSet* ps : {&adam_m_, &adam_v_})
    for (const auto& b : ps->blocks) {
      append(flat, b.weights);
      append(flat, b.a);
      append(flat, b.b);
    }
  const std::uint64_t count = flat.size();
  out << "AOIMLP 1 " << adam_t_ << " " << describe(arch_) << "\n";
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(sizeof(double) * flat.size()));
  if (!out) throw std::runtime_error("Mlp::save: write failed");
}

Mlp Mlp::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("Mlp::load: missing header");
  std::istringstream hs(line);
  std::string magic;
  int version = 0;
  long steps = 0;
  hs >> magic >> version >> steps;
  if (magic != "AOIMLP" || version != 1) throw std::runtime_error("Mlp::load: bad header");
  std::string rest;
  std::getline(hs, rest);
  std::mt19937_64 dummy(0);
  Mlp net(parse_arch(rest), dummy);
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  std::vector<double> flat(count);
  in.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(sizeof(double) * count));
  if (!in) throw std::runtime_error("Mlp::load: truncated payload");

  const std::size_t state_size = net.flat_state().size();
  if (count < state_size) throw std::runtime_error("Mlp::load: payload size mismatch");
  std::vector<double> state(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(state_size));
  net.load_flat_state(state);
  std::size_t pos = state_size;
  for (ParamSet* ps : {&net.adam_m_, &net.adam_v_})
    for (auto& b : ps->blocks) {
      take(flat, pos, b.weights);
      take(flat, pos, b.a);
      take(flat, pos, b.b);
    }
  if (pos != flat.size()) throw std::runtime_error("Mlp::load: payload size mismatch");
  net.adam_t_ = steps;
  return net;
}

}  // namespace aoimec::nn
