"""Freeze reference VADER scores for a 200-sentence news-style fixture.

Requires the `vaderSentiment` package.  Run from the repository root:
    python3 scripts/make_vader_fixture.py
"""
import random

from vaderSentiment.vaderSentiment import SentimentIntensityAnalyzer

rng = random.Random(17)

fixed = [
    "Crude oil on the New York Mercantile Exchange dropped to $54.40 during early afternoon trading, marking a fifth day of lower oil prices.",
    "Mining shares moved higher on hopes for more Chinese stimulus to boost the country’s economy, with Rio Tinto rising 6.5p to 2873.5p and BHP Billiton 9p better at 1404.5p.",
    "In 2011, during Barack Obama’s first term in office, the US surpassed Russia as the world’s largest natural gas producer, and in early 2018 it overtook Saudi Arabia as the leading producer of crude oil.",
    "In Baghdad, a cameraman died when an American tank fired on the Palestine Hotel.",
    "Oil prices are not good today.",
    "Traders were not worried about supply, but analysts warned of a crash.",
    "OPEC output cut is GREAT news for producers!!",
    "Is the rally over??",
    "Refiners are kind of optimistic about margins.",
    "Prices barely moved despite strong demand.",
    "The outlook is very bad and getting worse.",
    "Without a doubt, a terrible week for crude.",
    "Investors never felt so confident about energy stocks.",
    "At least it isn't a horrible quarter for drillers.",
    "Brent fell sharply; WTI also FELL.",
    "",
]

subjects = ["Crude oil", "Brent", "WTI futures", "Energy stocks", "Refiners", "OPEC", "Shale producers",
            "Analysts", "Traders", "Investors", "The market", "Saudi Arabia", "Russia", "China's demand"]
verbs_pos = ["rallied", "surged", "recovered", "gained", "improved", "climbed", "rebounded"]
verbs_neg = ["plunged", "collapsed", "slumped", "crashed", "fell", "dropped", "declined", "tumbled"]
verbs_neu = ["moved", "traded", "held", "stayed", "remained", "settled"]
adj_pos = ["strong", "optimistic", "confident", "healthy", "positive", "robust", "great"]
adj_neg = ["weak", "worried", "fearful", "bad", "terrible", "gloomy", "uncertain", "volatile"]
boosters = ["very", "extremely", "slightly", "somewhat", "really", "barely", "hugely", "kind of", "sort of"]
negs = ["not", "never", "hardly", "didn't", "isn't", "without"]
tails = ["after the inventory report", "amid supply concerns", "on Tuesday", "as the dollar weakened",
         "ahead of the OPEC meeting", "following the sanctions news", "in early trading", "despite the storm",
         "on fears of a recession", "with hopes of a deal", "as war risks rose", "after the hurricane"]
punct = [".", ".", ".", "!", "!!", "!!!", "?", "??", "???", "!!!!!"]


def cap(w):
    return w.upper() if rng.random() < 0.12 else w


def sentence():
    kind = rng.randrange(6)
    s = rng.choice(subjects)
    if kind == 0:
        v = rng.choice(verbs_pos + verbs_neg + verbs_neu)
        body = f"{s} {cap(v)} {rng.choice(tails)}"
    elif kind == 1:
        a = rng.choice(adj_pos + adj_neg)
        body = f"{s} looked {rng.choice(boosters)} {cap(a)} {rng.choice(tails)}"
    elif kind == 2:
        a = rng.choice(adj_pos + adj_neg)
        body = f"{s} {rng.choice(['was', 'were', 'is'])} {rng.choice(negs)} {cap(a)} {rng.choice(tails)}"
    elif kind == 3:
        a1 = rng.choice(adj_pos)
        a2 = rng.choice(adj_neg)
        if rng.random() < 0.5:
            a1, a2 = a2, a1
        body = f"{s} seemed {a1} early, but {rng.choice(subjects).lower()} turned {cap(a2)} {rng.choice(tails)}"
    elif kind == 4:
        v = rng.choice(verbs_pos + verbs_neg)
        b = rng.choice(boosters)
        body = f"{s} {v} {b} sharply {rng.choice(tails)} and traders were {rng.choice(adj_pos + adj_neg)}"
    else:
        w = rng.sample(adj_pos + adj_neg, 2)
        body = f"{rng.choice(tails).capitalize()}, {s.lower()} looked {w[0]} and {cap(w[1])}"
    return body + rng.choice(punct)


sents = list(fixed)
seen = set(sents)
while len(sents) < 200:
    s = sentence()
    if s not in seen:
        seen.add(s)
        sents.append(s)

an = SentimentIntensityAnalyzer()
with open("crates/core/tests/fixtures/vader_reference.tsv", "w") as fh:
    fh.write("text\tneg\tneu\tpos\tcompound\n")
    for s in sents:
        r = an.polarity_scores(s)
        fh.write(f"{s}\t{r['neg']}\t{r['neu']}\t{r['pos']}\t{r['compound']}\n")
print(len(sents))
