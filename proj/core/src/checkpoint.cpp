#include "uvm/checkpoint.hpp"

#include <array>
#include <bit>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace uvm {
namespace {

template <typename U>
void write_le(std::ostream& os, U v) {
    std::array<char, sizeof(U)> bytes{};
    for (std::size_t i = 0; i < sizeof(U); ++i)
        bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
    os.write(bytes.data(), bytes.size());
    if (!os) throw std::runtime_error("checkpoint: write failed");
}

template <typename U>
U read_le(std::istream& is) {
    std::array<char, sizeof(U)> bytes{};
    is.read(bytes.data(), bytes.size());
    if (!is) throw std::runtime_error("checkpoint: unexpected end of data");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
        v |= static_cast<U>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    return v;
}

}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) { write_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { write_le(os, v); }
void write_f64(std::ostream& os, double v) { write_le(os, std::bit_cast<std::uint64_t>(v)); }
std::uint32_t read_u32(std::istream& is) { return read_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return read_le<std::uint64_t>(is); }
double read_f64(std::istream& is) { return std::bit_cast<double>(read_le<std::uint64_t>(is)); }

void write_mlp(std::ostream& os, const Mlp& net) {
    write_u32(os, static_cast<std::uint32_t>(net.in_dim()));
    write_u32(os, static_cast<std::uint32_t>(net.hidden_dim()));
    write_u32(os, static_cast<std::uint32_t>(net.out_dim()));
    write_u64(os, static_cast<std::uint64_t>(net.param_count()));
    for (Eigen::Index i = 0; i < net.param_count(); ++i) write_f64(os, net.params()[i]);
    for (Eigen::Index i = 0; i < net.in_dim(); ++i) write_f64(os, net.input_shift()[i]);
    for (Eigen::Index i = 0; i < net.in_dim(); ++i) write_f64(os, net.input_scale()[i]);
}

Mlp read_mlp(std::istream& is) {
    const auto in = static_cast<int>(read_u32(is));
    const auto hidden = static_cast<int>(read_u32(is));
    const auto out = static_cast<int>(read_u32(is));
    const auto count = read_u64(is);
    Mlp net(in, hidden, out);
    if (count != static_cast<std::uint64_t>(net.param_count()))
        throw std::runtime_error("checkpoint: parameter count does not match layer sizes");
    for (Eigen::Index i = 0; i < net.param_count(); ++i) net.params()[i] = read_f64(is);
    Eigen::VectorXd shift(in), scale(in);
    for (int i = 0; i < in; ++i) shift[i] = read_f64(is);
    for (int i = 0; i < in; ++i) scale[i] = read_f64(is);
    net.set_input_normalization(std::move(shift), std::move(scale));
    return net;
}

}  // namespace uvm
