import json, random
from publicsuffixlist import PublicSuffixList
dat = open('../../../core/data/public_suffix_list.dat', encoding='utf-8').read()
psl = PublicSuffixList(dat)
rules = [l.strip() for l in dat.splitlines() if l.strip() and not l.startswith('//')]
rng = random.Random(20201206)
def label():
    return rng.choice('abcdefghijklmnopqrstuvwxyz') + ''.join(rng.choice('abcdefghijklmnopqrstuvwxyz0123456789') for _ in range(rng.randint(0, 6)))
rules_set = set(rules)
def wildcard_base(h):
    return ('*.'+h) in rules_set and h not in rules_set
out = []
for _ in range(3000):
    r = rng.choice(rules).lstrip('!')
    if r.startswith('*.'): r = r[2:]
    try:
        r = r.encode('idna').decode() if not r.isascii() else r
    except Exception:
        continue
    host = '.'.join([label() for _ in range(rng.randint(0, 3))] + [r])
    if wildcard_base(host):
        continue
    out.append([host, psl.privatesuffix(host)])
out += [[h, psl.privatesuffix(h)] for h in ['x.r.cloud.int.apple','www.ck','a.b.ck','b.ck','unknowntld','a.b.unknowntld']]
json.dump(out, open('../psl_vectors.json','w'), indent=0)
print(len(out), sum(1 for h,d in out if d is None))
