#include "ktnz/model.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "ktnz/errors.hpp"

namespace ktnz {

Layer conv_layer(std::string name, ConvGeometry geom, std::string kernel,
                 std::string bias) {
    Layer l;
    l.kind = LayerKind::Conv;
    l.name = std::move(name);
    l.geom = geom;
    l.weight = std::move(kernel);
    l.bias = std::move(bias);
    return l;
}

Layer relu_layer() {
    Layer l;
    l.kind = LayerKind::Relu;
    return l;
}

Layer avg_pool_layer(std::size_t window, std::size_t stride) {
    Layer l;
    l.kind = LayerKind::AvgPool;
    l.window = window;
    l.stride = stride;
    return l;
}

Layer max_pool_layer(std::size_t window, std::size_t stride) {
    Layer l;
    l.kind = LayerKind::MaxPool;
    l.window = window;
    l.stride = stride;
    return l;
}

Layer flatten_layer() {
    Layer l;
    l.kind = LayerKind::Flatten;
    return l;
}

Layer dense_layer(std::string name, std::string weight, std::string bias) {
    Layer l;
    l.kind = LayerKind::Dense;
    l.name = std::move(name);
    l.weight = std::move(weight);
    l.bias = std::move(bias);
    return l;
}

Layer softmax_layer() {
    Layer l;
    l.kind = LayerKind::Softmax;
    return l;
}

const Layer* ModelSpec::find_layer(const std::string& name) const {
    for (const Layer& l : layers) {
        if (!l.name.empty() && l.name == name) return &l;
    }
    return nullptr;
}

namespace {

struct Activation {
    bool is_image = true;
    std::size_t c = 0, h = 0, w = 0; // image
    std::size_t n = 0;               // vector
};

const DenseTensor& require_param(const ModelSpec& m, const std::string& name,
                                 const std::string& layer) {
    const auto it = m.parameters.find(name);
    if (it == m.parameters.end()) {
        fail(ErrorCode::ShapeInconsistency,
             "layer '" + layer + "' references missing parameter '" + name + "'");
    }
    return it->second;
}

Activation propagate(const ModelSpec& m, const Layer& l, Activation act) {
    const std::string where = l.name.empty() ? "<unnamed>" : l.name;
    switch (l.kind) {
    case LayerKind::Conv: {
        if (!act.is_image) {
            fail(ErrorCode::ShapeInconsistency,
                 "conv layer '" + where + "' needs an image input");
        }
        const DenseTensor& k = require_param(m, l.weight, where);
        if (k.rank() != 4) {
            fail(ErrorCode::ShapeInconsistency,
                 "conv kernel '" + l.weight + "' must be rank 4");
        }
        if (k.dim(1) != act.c) {
            fail(ErrorCode::ShapeInconsistency,
                 "conv layer '" + where + "': kernel IN dim " +
                     std::to_string(k.dim(1)) + " vs activation channels " +
                     std::to_string(act.c));
        }
        if (k.dim(2) != l.geom.kernel_h || k.dim(3) != l.geom.kernel_w) {
            fail(ErrorCode::ShapeInconsistency,
                 "conv layer '" + where + "': geometry disagrees with kernel dims");
        }
        if (!l.bias.empty()) {
            const DenseTensor& b = require_param(m, l.bias, where);
            if (b.rank() != 1 || b.dim(0) != k.dim(0)) {
                fail(ErrorCode::ShapeInconsistency,
                     "conv layer '" + where + "': bias must be a vector of OUT size");
            }
        }
        try {
            const auto [h, w] = output_dims(l.geom, act.h, act.w);
            return Activation{true, k.dim(0), h, w, 0};
        } catch (const Error& e) {
            fail(ErrorCode::ShapeInconsistency,
                 "conv layer '" + where + "': " + e.what());
        }
    }
    case LayerKind::Relu:
        return act;
    case LayerKind::AvgPool:
    case LayerKind::MaxPool: {
        if (!act.is_image) {
            fail(ErrorCode::ShapeInconsistency,
                 "pool layer needs an image input");
        }
        try {
            const ConvGeometry g{l.window, l.window, l.stride, l.stride, 0, 0};
            const auto [h, w] = output_dims(g, act.h, act.w);
            return Activation{true, act.c, h, w, 0};
        } catch (const Error& e) {
            fail(ErrorCode::ShapeInconsistency,
                 std::string("pool layer: ") + e.what());
        }
    }
    case LayerKind::Flatten:
        if (!act.is_image) {
            fail(ErrorCode::ShapeInconsistency, "flatten needs an image input");
        }
        return Activation{false, 0, 0, 0, act.c * act.h * act.w};
    case LayerKind::Dense: {
        if (act.is_image) {
            fail(ErrorCode::ShapeInconsistency,
                 "dense layer '" + where + "' needs a flattened input");
        }
        const DenseTensor& wgt = require_param(m, l.weight, where);
        if (wgt.rank() != 2 || wgt.dim(1) != act.n) {
            fail(ErrorCode::ShapeInconsistency,
                 "dense layer '" + where + "': weight must be (out x " +
                     std::to_string(act.n) + ")");
        }
        const DenseTensor& b = require_param(m, l.bias, where);
        if (b.rank() != 1 || b.dim(0) != wgt.dim(0)) {
            fail(ErrorCode::ShapeInconsistency,
                 "dense layer '" + where + "': bias must be a vector of out size");
        }
        return Activation{false, 0, 0, 0, wgt.dim(0)};
    }
    case LayerKind::Softmax:
        if (act.is_image) {
            fail(ErrorCode::ShapeInconsistency, "softmax needs a flattened input");
        }
        return act;
    }
    fail(ErrorCode::ShapeInconsistency, "unknown layer kind");
}

Activation walk_shapes(const ModelSpec& m) {
    Activation act{true, m.input_shape[0], m.input_shape[1], m.input_shape[2], 0};
    if (act.c < 1 || act.h < 1 || act.w < 1) {
        fail(ErrorCode::ShapeInconsistency, "input shape must be positive");
    }
    for (const Layer& l : m.layers) act = propagate(m, l, act);
    return act;
}

} // namespace

void validate_model(const ModelSpec& m) { (void)walk_shapes(m); }

std::vector<std::size_t> output_shape(const ModelSpec& m) {
    const Activation act = walk_shapes(m);
    if (act.is_image) return {act.c, act.h, act.w};
    return {act.n};
}

namespace {

void check_token(const std::string& token, const char* what) {
    if (token.empty() ||
        token.find_first_of(" \t\n=") != std::string::npos) {
        fail(ErrorCode::ShapeInconsistency,
             std::string(what) + " may not be empty or contain whitespace/'=': '" +
                 token + "'");
    }
}

} // namespace

std::string describe_layers(const ModelSpec& m) {
    std::ostringstream out;
    out << "input " << m.input_shape[0] << ' ' << m.input_shape[1] << ' '
        << m.input_shape[2] << '\n';
    for (const Layer& l : m.layers) {
        switch (l.kind) {
        case LayerKind::Conv:
            check_token(l.name, "conv layer name");
            check_token(l.weight, "conv kernel parameter");
            out << "conv " << l.name << " kernel=" << l.weight;
            if (!l.bias.empty()) {
                check_token(l.bias, "conv bias parameter");
                out << " bias=" << l.bias;
            }
            out << " kh=" << l.geom.kernel_h << " kw=" << l.geom.kernel_w
                << " sh=" << l.geom.stride_h << " sw=" << l.geom.stride_w
                << " ph=" << l.geom.pad_h << " pw=" << l.geom.pad_w << '\n';
            break;
        case LayerKind::Relu:
            out << "relu\n";
            break;
        case LayerKind::AvgPool:
            out << "avg_pool window=" << l.window << " stride=" << l.stride << '\n';
            break;
        case LayerKind::MaxPool:
            out << "max_pool window=" << l.window << " stride=" << l.stride << '\n';
            break;
        case LayerKind::Flatten:
            out << "flatten\n";
            break;
        case LayerKind::Dense:
            check_token(l.name, "dense layer name");
            check_token(l.weight, "dense weight parameter");
            check_token(l.bias, "dense bias parameter");
            out << "dense " << l.name << " weight=" << l.weight
                << " bias=" << l.bias << '\n';
            break;
        case LayerKind::Softmax:
            out << "softmax\n";
            break;
        }
    }
    return out.str();
}

namespace {

constexpr unsigned char kMagic[4] = {0x4B, 0x54, 0x4E, 0x5A}; // "KTNZ"
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;

    void need(std::size_t n, const char* field) {
        if (pos + n > bytes.size()) {
            fail(ErrorCode::TruncatedFile,
                 std::string("file ends inside ") + field + " at offset " +
                     std::to_string(pos));
        }
    }
    std::uint8_t u8(const char* field) {
        need(1, field);
        return static_cast<std::uint8_t>(bytes[pos++]);
    }
    std::uint16_t u16(const char* field) {
        need(2, field);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) {
            v |= static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[pos++]))
                 << (8 * i);
        }
        return v;
    }
    std::uint64_t u64(const char* field) {
        need(8, field);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos++]))
                 << (8 * i);
        }
        return v;
    }
    std::string str(std::size_t n, const char* field) {
        need(n, field);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
    double f64(const char* field) {
        const std::uint64_t bits = u64(field);
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    float f32(const char* field) {
        need(4, field);
        std::uint32_t bits = 0;
        for (int i = 0; i < 4; ++i) {
            bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos++]))
                    << (8 * i);
        }
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }
};

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string token;
    while (in >> token) out.push_back(token);
    return out;
}

std::size_t parse_uint(const std::string& s, const std::string& field) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        fail(ErrorCode::ShapeInconsistency,
             "field '" + field + "' is not an unsigned integer: '" + s + "'");
    }
    return static_cast<std::size_t>(std::stoull(s));
}

// key=value token, e.g. "kernel=conv1.w".
std::pair<std::string, std::string> parse_kv(const std::string& token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= token.size()) {
        fail(ErrorCode::ShapeInconsistency,
             "malformed key=value token '" + token + "' in layer text");
    }
    return {token.substr(0, eq), token.substr(eq + 1)};
}

std::map<std::string, std::string> kv_map(const std::vector<std::string>& tokens,
                                          std::size_t from) {
    std::map<std::string, std::string> kv;
    for (std::size_t i = from; i < tokens.size(); ++i) {
        const auto [k, v] = parse_kv(tokens[i]);
        if (!kv.emplace(k, v).second) {
            fail(ErrorCode::ShapeInconsistency, "duplicate key '" + k + "' in layer text");
        }
    }
    return kv;
}

std::string take(std::map<std::string, std::string>& kv, const std::string& key,
                 const std::string& line) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
        fail(ErrorCode::ShapeInconsistency,
             "missing key '" + key + "' in layer line '" + line + "'");
    }
    std::string v = it->second;
    kv.erase(it);
    return v;
}

void expect_empty(const std::map<std::string, std::string>& kv,
                  const std::string& line) {
    if (!kv.empty()) {
        fail(ErrorCode::ShapeInconsistency,
             "unexpected key '" + kv.begin()->first + "' in layer line '" + line + "'");
    }
}

void parse_layer_text(ModelSpec& m, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    bool saw_input = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> tokens = split_ws(line);
        const std::string& head = tokens[0];
        if (head == "input") {
            if (saw_input || tokens.size() != 4) {
                fail(ErrorCode::ShapeInconsistency, "bad input line '" + line + "'");
            }
            m.input_shape = {parse_uint(tokens[1], "input C"),
                             parse_uint(tokens[2], "input H"),
                             parse_uint(tokens[3], "input W")};
            saw_input = true;
        } else if (head == "conv") {
            if (tokens.size() < 2) {
                fail(ErrorCode::ShapeInconsistency, "conv line needs a name");
            }
            auto kv = kv_map(tokens, 2);
            Layer l;
            l.kind = LayerKind::Conv;
            l.name = tokens[1];
            l.weight = take(kv, "kernel", line);
            if (kv.count("bias")) l.bias = take(kv, "bias", line);
            l.geom.kernel_h = parse_uint(take(kv, "kh", line), "kh");
            l.geom.kernel_w = parse_uint(take(kv, "kw", line), "kw");
            l.geom.stride_h = parse_uint(take(kv, "sh", line), "sh");
            l.geom.stride_w = parse_uint(take(kv, "sw", line), "sw");
            l.geom.pad_h = parse_uint(take(kv, "ph", line), "ph");
            l.geom.pad_w = parse_uint(take(kv, "pw", line), "pw");
            expect_empty(kv, line);
            m.layers.push_back(std::move(l));
        } else if (head == "relu") {
            m.layers.push_back(relu_layer());
        } else if (head == "avg_pool" || head == "max_pool") {
            auto kv = kv_map(tokens, 1);
            const std::size_t window = parse_uint(take(kv, "window", line), "window");
            const std::size_t stride = parse_uint(take(kv, "stride", line), "stride");
            expect_empty(kv, line);
            m.layers.push_back(head == "avg_pool" ? avg_pool_layer(window, stride)
                                                  : max_pool_layer(window, stride));
        } else if (head == "flatten") {
            m.layers.push_back(flatten_layer());
        } else if (head == "dense") {
            if (tokens.size() < 2) {
                fail(ErrorCode::ShapeInconsistency, "dense line needs a name");
            }
            auto kv = kv_map(tokens, 2);
            Layer l;
            l.kind = LayerKind::Dense;
            l.name = tokens[1];
            l.weight = take(kv, "weight", line);
            l.bias = take(kv, "bias", line);
            expect_empty(kv, line);
            m.layers.push_back(std::move(l));
        } else if (head == "softmax") {
            m.layers.push_back(softmax_layer());
        } else {
            fail(ErrorCode::ShapeInconsistency, "unknown layer '" + head + "'");
        }
    }
    if (!saw_input) {
        fail(ErrorCode::ShapeInconsistency, "layer text lacks an input line");
    }
}

} // namespace

void save_model(const ModelSpec& m, const std::string& path) {
    std::string out;
    out.append(reinterpret_cast<const char*>(kMagic), 4);
    put_u16(out, kVersion);

    const std::string desc = describe_layers(m);
    put_u64(out, desc.size());
    out += desc;

    put_u64(out, m.parameters.size());
    for (const auto& [name, tensor] : m.parameters) {
        check_token(name, "parameter name");
        put_u64(out, name.size());
        out += name;
        out.push_back(0); // dtype f64
        out.push_back(static_cast<char>(tensor.rank()));
        for (std::size_t d : tensor.dims()) put_u64(out, d);
        for (double v : tensor.data()) put_f64(out, v);
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) fail(ErrorCode::TruncatedFile, "cannot open for writing: " + path);
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) fail(ErrorCode::TruncatedFile, "short write to " + path);
}

ModelSpec load_model(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) fail(ErrorCode::TruncatedFile, "cannot open " + path);
    std::ostringstream buf;
    buf << file.rdbuf();
    const std::string bytes = buf.str();

    Reader r{bytes};
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        fail(ErrorCode::BadMagic, "bad magic at offset 0 in " + path);
    }
    r.pos = 4;
    const std::uint16_t version = r.u16("version");
    if (version != kVersion) {
        fail(ErrorCode::UnsupportedVersion,
             "unsupported container version " + std::to_string(version));
    }

    ModelSpec m;
    const std::uint64_t desc_len = r.u64("layer text length");
    parse_layer_text(m, r.str(desc_len, "layer text"));

    const std::uint64_t n_tensors = r.u64("tensor count");
    for (std::uint64_t t = 0; t < n_tensors; ++t) {
        const std::uint64_t name_len = r.u64("tensor name length");
        const std::string name = r.str(name_len, "tensor name");
        const std::uint8_t dtype = r.u8("dtype");
        if (dtype > 1) {
            fail(ErrorCode::ShapeInconsistency,
                 "tensor '" + name + "': unknown dtype " + std::to_string(dtype));
        }
        const std::uint8_t rank = r.u8("rank");
        std::vector<std::size_t> dims(rank);
        std::size_t count = 1;
        for (std::uint8_t d = 0; d < rank; ++d) {
            dims[d] = r.u64("dims");
            count *= dims[d];
        }
        std::vector<double> data(count);
        if (dtype == 0) {
            for (std::size_t i = 0; i < count; ++i) data[i] = r.f64("payload");
        } else {
            // f32 appears only at ingestion boundaries; widen on load.
            for (std::size_t i = 0; i < count; ++i) {
                data[i] = static_cast<double>(r.f32("payload"));
            }
        }
        if (!m.parameters.emplace(name, DenseTensor(dims, std::move(data))).second) {
            fail(ErrorCode::ShapeInconsistency, "duplicate tensor '" + name + "'");
        }
    }
    if (r.pos != bytes.size()) {
        fail(ErrorCode::ShapeInconsistency,
             "trailing bytes at offset " + std::to_string(r.pos));
    }

    validate_model(m);
    return m;
}

bool models_bitwise_equal(const ModelSpec& a, const ModelSpec& b) {
    if (describe_layers(a) != describe_layers(b)) return false;
    if (a.parameters.size() != b.parameters.size()) return false;
    auto ia = a.parameters.begin();
    auto ib = b.parameters.begin();
    for (; ia != a.parameters.end(); ++ia, ++ib) {
        if (ia->first != ib->first) return false;
        if (ia->second.dims() != ib->second.dims()) return false;
        if (std::memcmp(ia->second.data().data(), ib->second.data().data(),
                        ia->second.size() * sizeof(double)) != 0) {
            return false;
        }
    }
    return true;
}

} // namespace ktnz
