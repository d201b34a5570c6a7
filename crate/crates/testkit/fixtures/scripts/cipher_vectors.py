import json, random, struct
from cryptography.hazmat.primitives import padding
from cryptography.hazmat.primitives.ciphers import Cipher, modes
from cryptography.hazmat.decrepit.ciphers.algorithms import ARC4, TripleDES
from cryptography.hazmat.primitives.ciphers.algorithms import AES

rng = random.Random(20201206)
def rb(n): return bytes(rng.getrandbits(8) for _ in range(n))

def rc4_py(key, data):
    S = list(range(256)); j = 0
    for i in range(256):
        j = (j + S[i] + key[i % len(key)]) % 256; S[i], S[j] = S[j], S[i]
    i = j = 0; out = bytearray()
    for b in data:
        i = (i + 1) % 256; j = (j + S[i]) % 256; S[i], S[j] = S[j], S[i]
        out.append(b ^ S[(S[i] + S[j]) % 256])
    return bytes(out)
def rc4_lib(key, data):
    e = Cipher(ARC4(key), None).encryptor(); return e.update(data) + e.finalize()

def tea_enc(block, key, rounds=32):
    v0, v1 = struct.unpack(">2I", block)
    k = struct.unpack(">4I", key)
    s = 0; d = 0x9E3779B9; m = 0xFFFFFFFF
    for _ in range(rounds):
        s = (s + d) & m
        v0 = (v0 + ((((v1 << 4) & m) + k[0]) ^ (v1 + s) ^ ((v1 >> 5) + k[1]))) & m
        v1 = (v1 + ((((v0 << 4) & m) + k[2]) ^ (v0 + s) ^ ((v0 >> 5) + k[3]))) & m
    return struct.pack(">2I", v0, v1)
def tea(data, key):
    n = len(data) // 8 * 8
    return b"".join(tea_enc(data[i:i+8], key) for i in range(0, n, 8)) + data[n:]

def pad(data, bs):
    p = padding.PKCS7(bs*8).padder(); return p.update(data) + p.finalize()

vec = {"rc4": [], "tea": [], "aes_cbc": [], "des_cbc": []}
for k, p in [(b"Key", b"Plaintext"), (b"Wiki", b"pedia"), (b"Secret", b"Attack at dawn")]:
    vec["rc4"].append({"key": k.hex(), "plaintext": p.hex(), "ciphertext": rc4_py(k, p).hex()})
for i in range(9):
    k = rb(rng.choice([5, 8, 16, 32])); p = rb(rng.randrange(0, 100))
    c = rc4_lib(k, p); assert c == rc4_py(k, p)
    vec["rc4"].append({"key": k.hex(), "plaintext": p.hex(), "ciphertext": c.hex()})
vec["tea"].append({"key": "00"*16, "plaintext": "00"*8, "ciphertext": tea(bytes(8), bytes(16)).hex()})
for i in range(11):
    k = rb(16); p = rb(rng.randrange(8, 70))
    vec["tea"].append({"key": k.hex(), "plaintext": p.hex(), "ciphertext": tea(p, k).hex()})
for i in range(12):
    k = rb([16, 24, 32][i % 3]); iv = rb(16); p = rb(rng.randrange(0, 80))
    e = Cipher(AES(k), modes.CBC(iv)).encryptor()
    vec["aes_cbc"].append({"key": k.hex(), "iv": iv.hex(), "plaintext": p.hex(), "ciphertext": (e.update(pad(p,16))+e.finalize()).hex()})
for i in range(12):
    k = rb(8); iv = rb(8); p = rb(rng.randrange(0, 60))
    e = Cipher(TripleDES(k*3), modes.CBC(iv)).encryptor()
    vec["des_cbc"].append({"key": k.hex(), "iv": iv.hex(), "plaintext": p.hex(), "ciphertext": (e.update(pad(p,8))+e.finalize()).hex()})
json.dump(vec, open("../cipher_vectors.json", "w"), indent=1)
print({k: len(v) for k, v in vec.items()}, vec["rc4"][0]["ciphertext"], vec["tea"][0]["ciphertext"])
