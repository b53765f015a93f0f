#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "graphrec/autodiff.hpp"
#include "graphrec/error.hpp"
#include "support.hpp"

using namespace graphrec;
namespace ad = graphrec::ad;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) m(0, k++) = x;
  return m;
}

std::shared_ptr<const SparseMatrix> toy_norm() {
  return std::make_shared<const SparseMatrix>(sym_normalize(build_adjacency(test::toy_matrix())));
}

double check(const std::function<ad::Var(ad::Tape&)>& build) {
  ad::Tape tape;
  ad::Var loss = build(tape);
  auto res = ad::check_gradients(tape, loss);
  CHECK(res.checked > 0);
  return res.max_relative_error;
}

}  // namespace

TEST_CASE("analytic gradient of a sum of squares") {
  ad::Tape tape;
  auto x = tape.parameter(row({1, 2}));
  auto loss = ad::reduce_sum(ad::hadamard(x, x));
  tape.backward(loss);
  CHECK(tape.grad(x) == row({2, 4}));
}

TEST_CASE("gradient through a fixed sparse operator is its transpose applied to ones") {
  auto s = toy_norm();
  ad::Tape tape;
  Matrix x0 = test::random_matrix(9, 1, 3);
  auto x = tape.parameter(x0);
  tape.backward(ad::reduce_sum(ad::sparse_matmul(s, x)));
  Matrix expected = s->to_dense().transpose() * Matrix::Ones(9, 1);
  CHECK((tape.grad(x) - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("constant loss yields zero gradients; non-scalar loss is rejected") {
  ad::Tape tape;
  auto x = tape.parameter(row({1, 2, 3}));
  auto c = tape.constant(Matrix::Constant(1, 1, 5.0));
  tape.backward(c);
  CHECK(tape.grad(x).isZero());
  CHECK_THROWS_AS(tape.backward(x), NumericalError);
}

TEST_CASE("finite differences are exact on quadratics") {
  CHECK(check([](ad::Tape& t) {
    auto x = t.parameter(test::random_matrix(3, 4, 1));
    auto y = t.parameter(test::random_matrix(4, 2, 2));
    auto z = ad::matmul(x, y);
    return ad::reduce_sum(ad::hadamard(z, z));
  }) < 1e-6);
}

TEST_CASE("every primitive matches central differences") {
  auto s = toy_norm();
  auto idx = std::make_shared<const std::vector<std::int32_t>>(std::vector<std::int32_t>{2, 0, 2, 5});
  std::vector<std::pair<const char*, std::function<ad::Var(ad::Tape&)>>> cases = {
      {"sparse_matmul", [&](ad::Tape& t) { return ad::reduce_sum(ad::tanh(ad::sparse_matmul(s, t.parameter(test::random_matrix(9, 3, 4))))); }},
      {"weighted_spmm", [&](ad::Tape& t) {
         auto w = t.parameter(test::random_matrix(s->nnz(), 1, 5));
         auto x = t.parameter(test::random_matrix(9, 2, 6));
         return ad::reduce_sum(ad::sigmoid(ad::weighted_spmm(s, w, x)));
       }},
      {"matmul_t", [](ad::Tape& t) {
         return ad::reduce_sum(ad::tanh(ad::matmul(t.parameter(test::random_matrix(3, 4, 7)), t.parameter(test::random_matrix(5, 4, 8)), true)));
       }},
      {"add_sub_scale", [](ad::Tape& t) {
         auto a = t.parameter(test::random_matrix(3, 3, 9));
         auto b = t.parameter(test::random_matrix(3, 3, 10));
         return ad::reduce_sum(ad::tanh(ad::sub(ad::scale(a, 1.5), ad::div_scalar(ad::add(a, b), 3.0))));
       }},
      {"leaky_relu", [](ad::Tape& t) { return ad::reduce_sum(ad::hadamard(ad::leaky_relu(t.parameter(test::random_matrix(4, 4, 11))), t.constant(test::random_matrix(4, 4, 12)))); }},
      {"exp_log_softplus", [](ad::Tape& t) {
         auto x = t.parameter(test::random_matrix(3, 3, 13));
         return ad::reduce_sum(ad::log(ad::add(ad::exp(x), ad::softplus(x))));
       }},
      {"inv_sqrt", [](ad::Tape& t) {
         Matrix v = test::random_matrix(3, 2, 14).cwiseAbs().array() + 0.5;
         return ad::reduce_sum(ad::inv_sqrt(t.parameter(v)));
       }},
      {"l2norm_rows", [](ad::Tape& t) { return ad::reduce_sum(ad::hadamard(ad::l2norm_rows(t.parameter(test::random_matrix(4, 3, 15))), t.constant(test::random_matrix(4, 3, 16)))); }},
      {"softmax_rows", [](ad::Tape& t) { return ad::reduce_sum(ad::hadamard(ad::softmax_rows(t.parameter(test::random_matrix(4, 3, 17))), t.constant(test::random_matrix(4, 3, 18)))); }},
      {"concat_slice", [](ad::Tape& t) {
         auto a = t.parameter(test::random_matrix(3, 2, 19));
         auto b = t.parameter(test::random_matrix(3, 3, 20));
         auto c = ad::concat_cols({a, b, a});
         return ad::reduce_sum(ad::tanh(ad::slice_cols(c, 1, 3)));
       }},
      {"gather_row_sum", [&](ad::Tape& t) {
         auto x = t.parameter(test::random_matrix(6, 3, 21));
         return ad::reduce_sum(ad::sigmoid(ad::row_sum(ad::gather_rows(x, idx))));
       }},
      {"mean", [](ad::Tape& t) { return ad::mean(ad::exp(t.parameter(test::random_matrix(2, 5, 22)))); }},
  };
  for (auto& [name, build] : cases) {
    CAPTURE(name);
    CHECK(check(build) < 1e-4);
  }
}

TEST_CASE("adjoints accumulate over duplicated branches") {
  ad::Tape tape;
  auto x = tape.parameter(row({1.5, -2.0}));
  auto y = ad::add(ad::scale(x, 2.0), ad::hadamard(x, x));
  tape.backward(ad::reduce_sum(y));
  CHECK(tape.grad(x) == row({2.0 + 3.0, 2.0 - 4.0}));
}

TEST_CASE("leaky relu slope and subgradient at zero") {
  ad::Tape tape;
  auto x = tape.parameter(row({-1.0, 0.0, 2.0}));
  auto y = ad::leaky_relu(x);
  CHECK(y.value() == row({-0.2, 0.0, 2.0}));
  tape.backward(ad::reduce_sum(y));
  CHECK(tape.grad(x) == row({0.2, 0.2, 1.0}));
}

TEST_CASE("kink crossings are skipped by the finite-difference check") {
  ad::Tape tape;
  auto x = tape.parameter(row({1e-6, 0.3}));
  auto loss = ad::reduce_sum(ad::leaky_relu(x));
  auto res = ad::check_gradients(tape, loss);
  CHECK(res.skipped == 1);
  CHECK(res.checked == 1);
  CHECK(res.max_relative_error < 1e-8);
}

TEST_CASE("NaN in the forward pass is reported") {
  ad::Tape tape;
  auto x = tape.parameter(row({-1.0}));
  auto loss = ad::reduce_sum(ad::log(x));
  CHECK_THROWS_AS(ad::check_gradients(tape, loss), NumericalError);
}

TEST_CASE("shape mismatches are rejected eagerly") {
  ad::Tape tape;
  auto a = tape.parameter(Matrix::Zero(2, 3));
  auto b = tape.parameter(Matrix::Zero(3, 2));
  CHECK_THROWS_AS(ad::add(a, b), DataError);
  CHECK_THROWS_AS(ad::matmul(a, a), DataError);
}
