#include "sfag/tape.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace sfag::ad {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using CEMap = Eigen::Map<const EMat>;

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape_str() +
                                " and " + b.shape_str());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const std::string& detail) {
    throw std::invalid_argument(std::string(op) + ": " + detail + " (operand " + a.shape_str() +
                                ")");
}

} // namespace

int Tape::check_id(Value v) const {
    if (v.tape != this)
        throw std::invalid_argument("value does not belong to this tape");
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
        throw std::invalid_argument("value id out of range: " + std::to_string(v.id));
    return v.id;
}

Value Tape::push(Node n) {
    eval(n);
    nodes_.push_back(std::move(n));
    return Value{this, static_cast<int>(nodes_.size()) - 1};
}

Value Tape::constant(Tensor t) {
    Node n;
    n.kind = OpKind::Constant;
    n.value = std::move(t);
    n.needs_grad = false;
    nodes_.push_back(std::move(n));
    return Value{this, static_cast<int>(nodes_.size()) - 1};
}

Value Tape::input(Tensor t) {
    Node n;
    n.kind = OpKind::Input;
    n.value = std::move(t);
    n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return Value{this, static_cast<int>(nodes_.size()) - 1};
}

Value Tape::unary(OpKind k, Value a, double c0) {
    const int ia = check_id(a);
    Node n;
    n.kind = k;
    n.a = ia;
    n.c0 = c0;
    n.needs_grad = nodes_[ia].needs_grad;
    return push(std::move(n));
}

Value Tape::binary_same_shape(OpKind k, Value a, Value b) {
    const int ia = check_id(a);
    const int ib = check_id(b);
    if (!nodes_[ia].value.same_shape(nodes_[ib].value)) {
        const char* name = k == OpKind::Add   ? "add"
                           : k == OpKind::Sub ? "sub"
                           : k == OpKind::Mul ? "mul"
                                              : "div";
        shape_error(name, nodes_[ia].value, nodes_[ib].value);
    }
    Node n;
    n.kind = k;
    n.a = ia;
    n.b = ib;
    n.needs_grad = nodes_[ia].needs_grad || nodes_[ib].needs_grad;
    return push(std::move(n));
}

Value Tape::add(Value a, Value b) { return binary_same_shape(OpKind::Add, a, b); }
Value Tape::sub(Value a, Value b) { return binary_same_shape(OpKind::Sub, a, b); }
Value Tape::mul(Value a, Value b) { return binary_same_shape(OpKind::Mul, a, b); }
Value Tape::div(Value a, Value b) { return binary_same_shape(OpKind::Div, a, b); }

Value Tape::scale(Value a, double c) { return unary(OpKind::Scale, a, c); }
Value Tape::add_scalar(Value a, double c) { return unary(OpKind::AddScalar, a, c); }

Value Tape::matmul(Value a, Value b) {
    const int ia = check_id(a);
    const int ib = check_id(b);
    if (nodes_[ia].value.cols != nodes_[ib].value.rows)
        shape_error("matmul", nodes_[ia].value, nodes_[ib].value);
    Node n;
    n.kind = OpKind::MatMul;
    n.a = ia;
    n.b = ib;
    n.needs_grad = nodes_[ia].needs_grad || nodes_[ib].needs_grad;
    return push(std::move(n));
}

Value Tape::transpose(Value a) { return unary(OpKind::Transpose, a); }
Value Tape::sum(Value a) { return unary(OpKind::Sum, a); }
Value Tape::row_sum(Value a) { return unary(OpKind::RowSum, a); }
Value Tape::col_sum(Value a) { return unary(OpKind::ColSum, a); }

Value Tape::broadcast_scalar(Value a, int rows, int cols) {
    const int ia = check_id(a);
    if (nodes_[ia].value.numel() != 1)
        shape_error("broadcast_scalar", nodes_[ia].value, "expected [1x1]");
    Node n;
    n.kind = OpKind::BroadcastScalar;
    n.a = ia;
    n.i0 = rows;
    n.i1 = cols;
    n.needs_grad = nodes_[ia].needs_grad;
    return push(std::move(n));
}

Value Tape::broadcast_col(Value a, int cols) {
    const int ia = check_id(a);
    if (nodes_[ia].value.cols != 1)
        shape_error("broadcast_col", nodes_[ia].value, "expected a column vector");
    Node n;
    n.kind = OpKind::BroadcastCol;
    n.a = ia;
    n.i0 = cols;
    n.needs_grad = nodes_[ia].needs_grad;
    return push(std::move(n));
}

Value Tape::broadcast_row(Value a, int rows) {
    const int ia = check_id(a);
    if (nodes_[ia].value.rows != 1)
        shape_error("broadcast_row", nodes_[ia].value, "expected a row vector");
    Node n;
    n.kind = OpKind::BroadcastRow;
    n.a = ia;
    n.i0 = rows;
    n.needs_grad = nodes_[ia].needs_grad;
    return push(std::move(n));
}

Value Tape::sqrt(Value a, double eps) { return unary(OpKind::Sqrt, a, eps); }
Value Tape::log(Value a) { return unary(OpKind::Log, a); }
Value Tape::exp(Value a) { return unary(OpKind::Exp, a); }
Value Tape::tanh(Value a) { return unary(OpKind::Tanh, a); }
Value Tape::leaky_relu(Value a, double slope) { return unary(OpKind::LeakyRelu, a, slope); }

Value Tape::slice_cols(Value a, int start, int len) {
    const int ia = check_id(a);
    const Tensor& t = nodes_[ia].value;
    if (start < 0 || len <= 0 || start + len > t.cols)
        shape_error("slice_cols", t,
                    "invalid range [" + std::to_string(start) + ", " +
                        std::to_string(start + len) + ")");
    Node n;
    n.kind = OpKind::SliceCols;
    n.a = ia;
    n.i0 = start;
    n.i1 = len;
    n.needs_grad = nodes_[ia].needs_grad;
    return push(std::move(n));
}

Value Tape::pad_cols(Value a, int start, int total) {
    const int ia = check_id(a);
    const Tensor& t = nodes_[ia].value;
    if (start < 0 || start + t.cols > total)
        shape_error("pad_cols", t,
                    "cannot place at col " + std::to_string(start) + " in width " +
                        std::to_string(total));
    Node n;
    n.kind = OpKind::PadCols;
    n.a = ia;
    n.i0 = start;
    n.i1 = total;
    n.needs_grad = nodes_[ia].needs_grad;
    return push(std::move(n));
}

Value Tape::slice_rows(Value a, int start, int len) {
    const int ia = check_id(a);
    const Tensor& t = nodes_[ia].value;
    if (start < 0 || len <= 0 || start + len > t.rows)
        shape_error("slice_rows", t,
                    "invalid range [" + std::to_string(start) + ", " +
                        std::to_string(start + len) + ")");
    Node n;
    n.kind = OpKind::SliceRows;
    n.a = ia;
    n.i0 = start;
    n.i1 = len;
    n.needs_grad = nodes_[ia].needs_grad;
    return push(std::move(n));
}

Value Tape::pad_rows(Value a, int start, int total) {
    const int ia = check_id(a);
    const Tensor& t = nodes_[ia].value;
    if (start < 0 || start + t.rows > total)
        shape_error("pad_rows", t,
                    "cannot place at row " + std::to_string(start) + " in height " +
                        std::to_string(total));
    Node n;
    n.kind = OpKind::PadRows;
    n.a = ia;
    n.i0 = start;
    n.i1 = total;
    n.needs_grad = nodes_[ia].needs_grad;
    return push(std::move(n));
}

Value Tape::gather_cols(Value a, std::vector<int> idx) {
    const int ia = check_id(a);
    const Tensor& t = nodes_[ia].value;
    if (idx.empty())
        shape_error("gather_cols", t, "empty index list");
    for (int j : idx)
        if (j < 0 || j >= t.cols)
            shape_error("gather_cols", t, "index " + std::to_string(j) + " out of range");
    Node n;
    n.kind = OpKind::GatherCols;
    n.a = ia;
    n.idx = std::move(idx);
    n.needs_grad = nodes_[ia].needs_grad;
    return push(std::move(n));
}

Value Tape::scatter_cols(Value a, std::vector<int> idx, int total) {
    const int ia = check_id(a);
    const Tensor& t = nodes_[ia].value;
    if (static_cast<int>(idx.size()) != t.cols)
        shape_error("scatter_cols", t, "index count " + std::to_string(idx.size()) +
                                           " does not match input width");
    for (int j : idx)
        if (j < 0 || j >= total)
            shape_error("scatter_cols", t, "index " + std::to_string(j) + " out of range");
    Node n;
    n.kind = OpKind::ScatterCols;
    n.a = ia;
    n.i0 = total;
    n.idx = std::move(idx);
    n.needs_grad = nodes_[ia].needs_grad;
    return push(std::move(n));
}

Value Tape::concat_cols(Value a, Value b) {
    const int ia = check_id(a);
    const int ib = check_id(b);
    if (nodes_[ia].value.rows != nodes_[ib].value.rows)
        shape_error("concat_cols", nodes_[ia].value, nodes_[ib].value);
    Node n;
    n.kind = OpKind::ConcatCols;
    n.a = ia;
    n.b = ib;
    n.needs_grad = nodes_[ia].needs_grad || nodes_[ib].needs_grad;
    return push(std::move(n));
}

Value Tape::cumsum(Value a) {
    const int ia = check_id(a);
    Node n;
    n.kind = OpKind::CumSum;
    n.a = ia;
    n.needs_grad = nodes_[ia].needs_grad;
    return push(std::move(n));
}

Value Tape::rev_cumsum(Value a) {
    const int ia = check_id(a);
    Node n;
    n.kind = OpKind::RevCumSum;
    n.a = ia;
    n.needs_grad = nodes_[ia].needs_grad;
    return push(std::move(n));
}

Value Tape::mean(Value a) {
    const double inv = 1.0 / static_cast<double>(val(a).numel());
    return scale(sum(a), inv);
}

void Tape::eval(Node& n) const {
    const Tensor* pa = n.a >= 0 ? &nodes_[n.a].value : nullptr;
    const Tensor* pb = n.b >= 0 ? &nodes_[n.b].value : nullptr;
    switch (n.kind) {
    case OpKind::Constant:
    case OpKind::Input:
        return;
    case OpKind::Add: {
        n.value = *pa;
        for (int i = 0; i < n.value.numel(); ++i) n.value.data[i] += pb->data[i];
        return;
    }
    case OpKind::Sub: {
        n.value = *pa;
        for (int i = 0; i < n.value.numel(); ++i) n.value.data[i] -= pb->data[i];
        return;
    }
    case OpKind::Mul: {
        n.value = *pa;
        for (int i = 0; i < n.value.numel(); ++i) n.value.data[i] *= pb->data[i];
        return;
    }
    case OpKind::Div: {
        n.value = *pa;
        for (int i = 0; i < n.value.numel(); ++i) n.value.data[i] /= pb->data[i];
        return;
    }
    case OpKind::Scale: {
        n.value = *pa;
        for (double& x : n.value.data) x *= n.c0;
        return;
    }
    case OpKind::AddScalar: {
        n.value = *pa;
        for (double& x : n.value.data) x += n.c0;
        return;
    }
    case OpKind::MatMul: {
        n.value = Tensor(pa->rows, pb->cols);
        CEMap A(pa->data.data(), pa->rows, pa->cols);
        CEMap B(pb->data.data(), pb->rows, pb->cols);
        EMap C(n.value.data.data(), n.value.rows, n.value.cols);
        C.noalias() = A * B;
        return;
    }
    case OpKind::Transpose: {
        n.value = Tensor(pa->cols, pa->rows);
        for (int r = 0; r < pa->rows; ++r)
            for (int c = 0; c < pa->cols; ++c) n.value.at(c, r) = pa->at(r, c);
        return;
    }
    case OpKind::Sum: {
        double s = 0.0;
        for (double x : pa->data) s += x;
        n.value = Tensor::scalar(s);
        return;
    }
    case OpKind::RowSum: {
        n.value = Tensor(pa->rows, 1);
        for (int r = 0; r < pa->rows; ++r) {
            double s = 0.0;
            for (int c = 0; c < pa->cols; ++c) s += pa->at(r, c);
            n.value.at(r, 0) = s;
        }
        return;
    }
    case OpKind::ColSum: {
        n.value = Tensor(1, pa->cols);
        for (int r = 0; r < pa->rows; ++r)
            for (int c = 0; c < pa->cols; ++c) n.value.at(0, c) += pa->at(r, c);
        return;
    }
    case OpKind::BroadcastScalar: {
        n.value = Tensor::full(n.i0, n.i1, pa->data[0]);
        return;
    }
    case OpKind::BroadcastCol: {
        n.value = Tensor(pa->rows, n.i0);
        for (int r = 0; r < pa->rows; ++r)
            for (int c = 0; c < n.i0; ++c) n.value.at(r, c) = pa->at(r, 0);
        return;
    }
    case OpKind::BroadcastRow: {
        n.value = Tensor(n.i0, pa->cols);
        for (int r = 0; r < n.i0; ++r)
            for (int c = 0; c < pa->cols; ++c) n.value.at(r, c) = pa->at(0, c);
        return;
    }
    case OpKind::Sqrt: {
        n.value = *pa;
        for (double& x : n.value.data) x = std::sqrt(x + n.c0);
        return;
    }
    case OpKind::Log: {
        n.value = *pa;
        for (double& x : n.value.data) x = std::log(x);
        return;
    }
    case OpKind::Exp: {
        n.value = *pa;
        for (double& x : n.value.data) x = std::exp(x);
        return;
    }
    case OpKind::Tanh: {
        n.value = *pa;
        for (double& x : n.value.data) x = std::tanh(x);
        return;
    }
    case OpKind::LeakyRelu: {
        n.value = *pa;
        for (double& x : n.value.data) x = x > 0.0 ? x : n.c0 * x;
        return;
    }
    case OpKind::LeakyReluMask: {
        n.value = *pa;
        for (double& x : n.value.data) x = x > 0.0 ? 1.0 : n.c0;
        return;
    }
    case OpKind::SliceCols: {
        n.value = Tensor(pa->rows, n.i1);
        for (int r = 0; r < pa->rows; ++r)
            for (int c = 0; c < n.i1; ++c) n.value.at(r, c) = pa->at(r, n.i0 + c);
        return;
    }
    case OpKind::PadCols: {
        n.value = Tensor(pa->rows, n.i1);
        for (int r = 0; r < pa->rows; ++r)
            for (int c = 0; c < pa->cols; ++c) n.value.at(r, n.i0 + c) = pa->at(r, c);
        return;
    }
    case OpKind::SliceRows: {
        n.value = Tensor(n.i1, pa->cols);
        for (int r = 0; r < n.i1; ++r)
            for (int c = 0; c < pa->cols; ++c) n.value.at(r, c) = pa->at(n.i0 + r, c);
        return;
    }
    case OpKind::PadRows: {
        n.value = Tensor(n.i1, pa->cols);
        for (int r = 0; r < pa->rows; ++r)
            for (int c = 0; c < pa->cols; ++c) n.value.at(n.i0 + r, c) = pa->at(r, c);
        return;
    }
    case OpKind::GatherCols: {
        n.value = Tensor(pa->rows, static_cast<int>(n.idx.size()));
        for (int r = 0; r < pa->rows; ++r)
            for (int c = 0; c < n.value.cols; ++c) n.value.at(r, c) = pa->at(r, n.idx[c]);
        return;
    }
    case OpKind::ScatterCols: {
        n.value = Tensor(pa->rows, n.i0);
        for (int r = 0; r < pa->rows; ++r)
            for (int c = 0; c < pa->cols; ++c) n.value.at(r, n.idx[c]) += pa->at(r, c);
        return;
    }
    case OpKind::ConcatCols: {
        n.value = Tensor(pa->rows, pa->cols + pb->cols);
        for (int r = 0; r < pa->rows; ++r) {
            for (int c = 0; c < pa->cols; ++c) n.value.at(r, c) = pa->at(r, c);
            for (int c = 0; c < pb->cols; ++c) n.value.at(r, pa->cols + c) = pb->at(r, c);
        }
        return;
    }
    case OpKind::CumSum: {
        n.value = Tensor(pa->rows, pa->cols);
        for (int r = 0; r < pa->rows; ++r) {
            double acc = 0.0;
            for (int c = 0; c < pa->cols; ++c) {
                acc += pa->at(r, c);
                n.value.at(r, c) = acc;
            }
        }
        return;
    }
    case OpKind::RevCumSum: {
        n.value = Tensor(pa->rows, pa->cols);
        for (int r = 0; r < pa->rows; ++r) {
            double acc = 0.0;
            for (int c = pa->cols - 1; c >= 0; --c) {
                acc += pa->at(r, c);
                n.value.at(r, c) = acc;
            }
        }
        return;
    }
    }
    throw std::logic_error("unhandled op kind");
}

std::vector<Value> Tape::gradients(Value root, std::span<const Value> wrt) {
    const int rid = check_id(root);
    if (nodes_[rid].value.numel() != 1)
        throw std::invalid_argument("backward root must be scalar, got " +
                                    nodes_[rid].value.shape_str());

    // Restrict the reverse sweep to nodes that depend on a wrt entry.
    std::vector<char> need(static_cast<std::size_t>(rid) + 1, 0);
    for (const Value& w : wrt) {
        const int wid = check_id(w);
        if (wid <= rid) need[wid] = 1;
    }
    for (int i = 0; i <= rid; ++i) {
        const Node& n = nodes_[i];
        if (n.a >= 0 && need[n.a]) need[i] = 1;
        if (n.b >= 0 && need[n.b]) need[i] = 1;
    }

    std::vector<int> adj(static_cast<std::size_t>(rid) + 1, -1);
    auto accumulate = [&](int target, Value g) {
        if (adj[target] < 0)
            adj[target] = g.id;
        else
            adj[target] = add(Value{this, adj[target]}, g).id;
    };

    adj[rid] = constant(Tensor::scalar(1.0)).id;
    for (int i = rid; i >= 0; --i) {
        if (adj[i] < 0 || !need[i]) continue;
        // Copy metadata: pushing VJP nodes may reallocate nodes_.
        const OpKind kind = nodes_[i].kind;
        const int ia = nodes_[i].a;
        const int ib = nodes_[i].b;
        const double c0 = nodes_[i].c0;
        const int i0 = nodes_[i].i0;
        const std::vector<int> idx = nodes_[i].idx;
        const int a_rows = ia >= 0 ? nodes_[ia].value.rows : 0;
        const int a_cols = ia >= 0 ? nodes_[ia].value.cols : 0;
        const int b_cols = ib >= 0 ? nodes_[ib].value.cols : 0;
        const bool need_a = ia >= 0 && need[ia];
        const bool need_b = ib >= 0 && need[ib];
        const Value g{this, adj[i]};
        const Value out{this, i};
        const Value va{this, ia};
        const Value vb{this, ib};

        switch (kind) {
        case OpKind::Constant:
        case OpKind::Input:
            break;
        case OpKind::Add:
            if (need_a) accumulate(ia, g);
            if (need_b) accumulate(ib, g);
            break;
        case OpKind::Sub:
            if (need_a) accumulate(ia, g);
            if (need_b) accumulate(ib, scale(g, -1.0));
            break;
        case OpKind::Mul:
            if (need_a) accumulate(ia, mul(g, vb));
            if (need_b) accumulate(ib, mul(g, va));
            break;
        case OpKind::Div:
            if (need_a) accumulate(ia, div(g, vb));
            if (need_b) accumulate(ib, scale(div(mul(g, out), vb), -1.0));
            break;
        case OpKind::Scale:
            if (need_a) accumulate(ia, scale(g, c0));
            break;
        case OpKind::AddScalar:
            if (need_a) accumulate(ia, g);
            break;
        case OpKind::MatMul:
            if (need_a) accumulate(ia, matmul(g, transpose(vb)));
            if (need_b) accumulate(ib, matmul(transpose(va), g));
            break;
        case OpKind::Transpose:
            if (need_a) accumulate(ia, transpose(g));
            break;
        case OpKind::Sum:
            if (need_a) accumulate(ia, broadcast_scalar(g, a_rows, a_cols));
            break;
        case OpKind::RowSum:
            if (need_a) accumulate(ia, broadcast_col(g, a_cols));
            break;
        case OpKind::ColSum:
            if (need_a) accumulate(ia, broadcast_row(g, a_rows));
            break;
        case OpKind::BroadcastScalar:
            if (need_a) accumulate(ia, sum(g));
            break;
        case OpKind::BroadcastCol:
            if (need_a) accumulate(ia, row_sum(g));
            break;
        case OpKind::BroadcastRow:
            if (need_a) accumulate(ia, col_sum(g));
            break;
        case OpKind::Sqrt:
            // out = sqrt(a + eps), d/da = 0.5 / out
            if (need_a) accumulate(ia, div(scale(g, 0.5), out));
            break;
        case OpKind::Log:
            if (need_a) accumulate(ia, div(g, va));
            break;
        case OpKind::Exp:
            if (need_a) accumulate(ia, mul(g, out));
            break;
        case OpKind::Tanh:
            if (need_a) accumulate(ia, sub(g, mul(g, mul(out, out))));
            break;
        case OpKind::LeakyRelu:
            if (need_a) accumulate(ia, mul(g, unary(OpKind::LeakyReluMask, va, c0)));
            break;
        case OpKind::LeakyReluMask:
            // Piecewise-constant; zero derivative almost everywhere.
            break;
        case OpKind::SliceCols:
            if (need_a) accumulate(ia, pad_cols(g, i0, a_cols));
            break;
        case OpKind::PadCols:
            if (need_a) accumulate(ia, slice_cols(g, i0, a_cols));
            break;
        case OpKind::SliceRows:
            if (need_a) accumulate(ia, pad_rows(g, i0, a_rows));
            break;
        case OpKind::PadRows:
            if (need_a) accumulate(ia, slice_rows(g, i0, a_rows));
            break;
        case OpKind::GatherCols:
            if (need_a) accumulate(ia, scatter_cols(g, idx, a_cols));
            break;
        case OpKind::ScatterCols:
            if (need_a) accumulate(ia, gather_cols(g, idx));
            break;
        case OpKind::ConcatCols:
            if (need_a) accumulate(ia, slice_cols(g, 0, a_cols));
            if (need_b) accumulate(ib, slice_cols(g, a_cols, b_cols));
            break;
        case OpKind::CumSum:
            if (need_a) accumulate(ia, rev_cumsum(g));
            break;
        case OpKind::RevCumSum:
            if (need_a) accumulate(ia, cumsum(g));
            break;
        }
    }

    std::vector<Value> out;
    out.reserve(wrt.size());
    for (const Value& w : wrt) {
        const int wid = check_id(w);
        if (wid <= rid && adj[wid] >= 0) {
            out.push_back(Value{this, adj[wid]});
        } else {
            const Tensor& t = nodes_[wid].value;
            out.push_back(constant(Tensor::zeros(t.rows, t.cols)));
        }
    }
    return out;
}

} // namespace sfag::ad
