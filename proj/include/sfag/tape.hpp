#pragma once

#include "sfag/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sfag::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives
/// and has not been cleared.
struct Value {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
};

enum class OpKind : std::uint8_t {
    Constant,
    Input,
    Add,
    Sub,
    Mul,
    Div,
    Scale,      // out = c0 * a
    AddScalar,  // out = a + c0
    MatMul,
    Transpose,
    Sum,             // all elements -> [1x1]
    RowSum,          // [m x n] -> [m x 1]
    ColSum,          // [m x n] -> [1 x n]
    BroadcastScalar, // [1x1] -> [i0 x i1]
    BroadcastCol,    // [m x 1] -> [m x i0]
    BroadcastRow,    // [1 x n] -> [i0 x n]
    Sqrt,            // out = sqrt(a + c0), c0 = smoothing epsilon
    Log,
    Exp,
    Tanh,
    LeakyRelu,       // slope c0
    LeakyReluMask,   // d/dx leaky_relu, treated as locally constant
    SliceCols,       // cols [i0, i0+i1)
    PadCols,         // inverse of SliceCols: embed at col i0 into width i1
    SliceRows,       // rows [i0, i0+i1)
    PadRows,         // embed at row i0 into height i1
    GatherCols,      // out[r][j] = a[r][idx[j]]
    ScatterCols,     // out [rows x i0], out[r][idx[j]] += a[r][j]
    ConcatCols,
    CumSum,          // out[r][c] = sum_{j<=c} a[r][j]
    RevCumSum,       // out[r][c] = sum_{j>=c} a[r][j]
};

struct Node {
    OpKind kind;
    int a = -1;
    int b = -1;
    double c0 = 0.0;
    int i0 = 0;
    int i1 = 0;
    std::vector<int> idx;
    Tensor value;
    bool needs_grad = false; // true iff the node depends on an Input leaf
};

/// Reverse-mode autodiff tape over dense 1-D/2-D tensors.
///
/// Ops evaluate eagerly: each node's value is computed when it is appended,
/// in construction order, so a finished graph is also a finished forward
/// pass. gradients() builds the adjoint computation out of the same
/// primitive ops and appends it to the tape, which makes the returned
/// gradients themselves differentiable (backward-through-backward).
class Tape {
public:
    static constexpr double kEps = 1e-8;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }
    void reserve(std::size_t n) { nodes_.reserve(n); }

    const Tensor& val(Value v) const { return nodes_[check_id(v)].value; }
    const Node& node(int id) const { return nodes_[id]; }

    // Leaves.
    Value constant(Tensor t);
    Value input(Tensor t);

    // Elementwise binary (equal shapes).
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);
    Value div(Value a, Value b);

    Value scale(Value a, double c);
    Value add_scalar(Value a, double c);

    Value matmul(Value a, Value b);
    Value transpose(Value a);

    Value sum(Value a);
    Value row_sum(Value a);
    Value col_sum(Value a);

    Value broadcast_scalar(Value a, int rows, int cols);
    Value broadcast_col(Value a, int cols);
    Value broadcast_row(Value a, int rows);

    Value sqrt(Value a, double eps = kEps);
    Value log(Value a);
    Value exp(Value a);
    Value tanh(Value a);
    Value leaky_relu(Value a, double slope);

    Value slice_cols(Value a, int start, int len);
    Value pad_cols(Value a, int start, int total);
    Value slice_rows(Value a, int start, int len);
    Value pad_rows(Value a, int start, int total);
    Value gather_cols(Value a, std::vector<int> idx);
    Value scatter_cols(Value a, std::vector<int> idx, int total);
    Value concat_cols(Value a, Value b);
    Value cumsum(Value a);
    Value rev_cumsum(Value a);

    // Composites.
    Value neg(Value a) { return scale(a, -1.0); }
    Value mean(Value a);
    Value square(Value a) { return mul(a, a); }
    Value abs_smooth(Value a, double eps = kEps) { return sqrt(square(a), eps); }

    /// Builds gradient nodes of a scalar root w.r.t. the given leaves (or any
    /// intermediate nodes) and returns them. Values are available immediately;
    /// a wrt entry the root does not depend on yields a zero constant.
    std::vector<Value> gradients(Value root, std::span<const Value> wrt);

private:
    std::vector<Node> nodes_;

    int check_id(Value v) const;
    Value push(Node n);
    Value unary(OpKind k, Value a, double c0 = 0.0);
    Value binary_same_shape(OpKind k, Value a, Value b);
    void eval(Node& n) const;
};

// Operator sugar for graph-building code.
inline Value operator+(Value a, Value b) { return a.tape->add(a, b); }
inline Value operator-(Value a, Value b) { return a.tape->sub(a, b); }
inline Value operator*(Value a, Value b) { return a.tape->mul(a, b); }
inline Value operator/(Value a, Value b) { return a.tape->div(a, b); }
inline Value operator*(Value a, double c) { return a.tape->scale(a, c); }
inline Value operator*(double c, Value a) { return a.tape->scale(a, c); }
inline Value operator-(Value a) { return a.tape->neg(a); }
inline Value operator+(Value a, double c) { return a.tape->add_scalar(a, c); }
inline Value operator-(Value a, double c) { return a.tape->add_scalar(a, -c); }

} // namespace sfag::ad
